import struct

import numpy as np
import pytest

from aldp_toolkit.exceptions import DimensionMismatch, DomainViolation, SchemaError
from aldp_toolkit.models.core import PrivacyBudget, Protocol
from aldp_toolkit.models.mechanisms import ReportBatch
from aldp_toolkit.services.categorical import build_protocol_params, estimate_frequencies, perturb_categorical_batch
from aldp_toolkit.services.codec import decode_batch, encode_batch


class TestCodec:
    def test_grr_cells_are_integers(self, rng):
        params = build_protocol_params(Protocol.GRR, 5, PrivacyBudget(1.0, 1e-6))
        cells = encode_batch(perturb_categorical_batch(np.array([0, 4, 2]), params, rng))
        assert all(cell.isdigit() for cell in cells)

    def test_bit_layout(self, rng):
        params = build_protocol_params(Protocol.SPRR, 10, PrivacyBudget(50.0, 0.0))
        batch = perturb_categorical_batch(np.array([0, 9]), params, rng)
        # 10 bits pack into 2 little-endian bytes
        assert encode_batch(batch) == ["0100", "0002"]

    def test_hash_layout(self, rng):
        params = build_protocol_params(Protocol.OLH, 8, PrivacyBudget(1.0, 1e-6))
        cells = encode_batch(perturb_categorical_batch(np.arange(20) % 8, params, rng))
        assert all(len(cell) == 20 for cell in cells)

    @pytest.mark.parametrize("protocol", list(Protocol))
    def test_decoded_batch_aggregates_identically(self, rng, protocol):
        params = build_protocol_params(protocol, 12, PrivacyBudget(1.0, 1e-5), prr_q=0.3)
        batch = perturb_categorical_batch(rng.integers(12, 40), params, rng)
        decoded = decode_batch(encode_batch(batch), protocol, 12, params.g)
        np.testing.assert_array_equal(decoded.values, batch.values)
        if batch.seeds is not None:
            np.testing.assert_array_equal(decoded.seeds, batch.seeds)

    def test_malformed(self):
        with pytest.raises(SchemaError):
            decode_batch(["zz"], Protocol.OLH, 4, 5)
        with pytest.raises(SchemaError):
            decode_batch(["1.5"], Protocol.GRR, 4)

    def test_gaussian_width(self):
        cell = np.zeros(3, dtype="<f8").tobytes().hex()
        with pytest.raises(DimensionMismatch):
            decode_batch([cell], Protocol.OPT_GM, 4)

    @pytest.mark.parametrize("cell", ["3", "7", "-1"])
    def test_grr_value_outside_domain(self, cell):
        with pytest.raises(DomainViolation, match="report 2"):
            decode_batch(["0", "1", cell], Protocol.GRR, 3)

    def test_hash_value_outside_range(self):
        cells = [struct.pack("<QH", 11, 4).hex(), struct.pack("<QH", 12, 5).hex()]
        with pytest.raises(DomainViolation, match="y=5"):
            decode_batch(cells, Protocol.OLH, 8, 5)
        with pytest.raises(SchemaError):
            decode_batch(cells, Protocol.OLH, 8)

    def test_aggregation_rejects_out_of_domain_grr(self):
        params = build_protocol_params(Protocol.GRR, 3, PrivacyBudget(1.0))
        batch = ReportBatch(protocol=Protocol.GRR, k=3, values=np.array([0, 1, 7]))
        with pytest.raises(DomainViolation):
            estimate_frequencies(batch, params)
