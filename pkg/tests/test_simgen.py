import math

import numpy as np
import pytest

from hetcart.simgen import (
    BaselineErrors,
    StructureSpec,
    compromise,
    compromise_sigma,
    export_csv,
    flat,
    generate_baseline,
    read_csv,
    realize,
    realize_from,
    step,
)


class TestBaseline:
    def test_determinism(self):
        a = generate_baseline(11, 50, 4).errors
        b = generate_baseline(11, 50, 4).errors
        assert np.array_equal(a, b)
        assert not np.array_equal(a, generate_baseline(12, 50, 4).errors)

    def test_rows_independent_of_batch(self):
        b = generate_baseline(3, 20, 10)
        assert np.array_equal(b.errors[7], b.row(7))
        # a longer run shares its leading rows with a shorter one
        assert np.array_equal(generate_baseline(3, 20, 3).errors, b.errors[:3])

    def test_out_of_range(self):
        b = generate_baseline(3, 20, 2)
        with pytest.raises(ValueError):
            b.row(2)
        with pytest.raises(ValueError):
            generate_baseline(3, 0, 2)

    def test_moments(self):
        e = generate_baseline(2014, 1000, 1000).errors.ravel()
        assert e.size == 10**6
        assert abs(e.mean()) < 5 / 1000  # 5 standard errors
        assert abs(e.var() - 1) < 5 * math.sqrt(2) / 1000
        assert abs(np.mean(e**3)) < 5 * math.sqrt(15) / 1000

    def test_substreams_uncorrelated(self):
        e = generate_baseline(5, 10_000, 6).errors
        c = np.corrcoef(e)
        off = c[~np.eye(6, dtype=bool)]
        assert np.all(np.abs(off) < 5 / math.sqrt(10_000))


class TestStructures:
    def test_means(self):
        s = step()
        mu = s.mu()
        assert mu[0] == 1 and mu[99] == 1 and mu[100] == 2 and mu[999] == 10
        assert len(np.unique(mu)) == 10
        assert np.all(np.bincount(mu.astype(int))[1:] == 100)
        assert np.all(flat().mu() == 0)
        assert s.jump_locations().tolist() == [100 * k + 0.5 for k in range(1, 10)]
        assert flat().jump_locations().size == 0

    def test_sigma(self):
        s = flat(3.0)
        sig = s.sigma()
        assert np.all(sig[:500] == 1) and np.all(sig[500:] == 3)

    def test_names(self):
        assert flat().name == "FC(1)"
        assert flat(10).name == "FH(10)"
        assert step(5).name == "SH(5)"
        assert step(2, c1=0).name == "S[0,2]"
        assert compromise(flat(10)).name == "FCc(10)"
        assert compromise(step(4)).name == "SCc(4)"

    def test_validation(self):
        with pytest.raises(ValueError):
            StructureSpec(mean="wavy")
        with pytest.raises(ValueError):
            flat(-1.0)
        with pytest.raises(ValueError):
            compromise_sigma(0.0)

    def test_compromise_sigma(self):
        assert compromise_sigma(1.0) == 1.0
        assert compromise_sigma(10.0) == pytest.approx(7.1063352, rel=1e-7)
        s = compromise(flat(10))
        assert np.mean(s.sigma() ** 2) == pytest.approx(np.mean(flat(10).sigma() ** 2))


class TestRealize:
    def test_homoscedastic_identity(self):
        b = generate_baseline(1, 1000, 2)
        d = realize(b, flat(), 1)
        assert np.array_equal(d.y, b.row(1))
        assert np.array_equal(d.mu, np.zeros(1000))

    def test_heteroscedastic_construction(self):
        b = generate_baseline(1, 1000, 1)
        e = b.row(0)
        d = realize(b, flat(3), 0)
        assert np.array_equal(d.y[:500], e[:500])
        assert np.array_equal(d.y[500:], 3 * e[500:])

    def test_common_random_numbers(self):
        b = generate_baseline(9, 1000, 3)
        for j in range(3):
            a = realize(b, step(1), j)
            h = realize(b, step(7), j)
            assert np.array_equal(a.y[:500], h.y[:500])
            assert np.allclose(h.y[500:] - h.mu[500:], 7 * (a.y[500:] - a.mu[500:]))

    def test_scale_coupling(self):
        e = generate_baseline(4, 1000, 1).row(0)
        c = compromise(flat(10))
        assert np.allclose(realize_from(e, c).y, compromise_sigma(10) * e)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            realize_from(np.zeros(10), flat())
        with pytest.raises(ValueError):
            realize(BaselineErrors(0, 10, 1), flat(), 0)


def test_csv_roundtrip(tmp_path):
    spec = step(4)
    d = realize(generate_baseline(0, 1000, 1), spec, 0)
    p = tmp_path / "d.csv"
    export_csv(d, spec, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "x,y,mu,sigma"
    assert len(lines) == 1001
    back = read_csv(p)
    assert np.array_equal(back.x, d.x)
    assert np.array_equal(back.y, d.y)
    assert np.array_equal(back.mu, d.mu)


def test_read_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,z\n1,2\n")
    with pytest.raises(ValueError, match="missing"):
        read_csv(p)
    p.write_text("x,y\n")
    with pytest.raises(ValueError, match="no data"):
        read_csv(p)
    p.write_text("x,y\n3,1\n1,2\n")
    d = read_csv(p)
    assert d.x.tolist() == [1, 3] and d.mu is None
