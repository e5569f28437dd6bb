"""Shared drivers for running the distributed pipeline inside tests."""

import numpy as np

import slabfft as sf


def rms(x):
    return float(np.sqrt(np.mean(np.square(np.abs(x)))))


def forward_gathered(grid, p, strategy, field,
                     mode=sf.CommMode.SERIAL, pattern=sf.CommPattern.PAIRWISE):
    """Distributed forward on p ranks, gathered to the global spectrum."""
    slabs = sf.scatter_real(field, grid, p)

    def body(ep):
        fp = sf.plan(grid, ep, strategy, pattern)
        spec = sf.forward(fp, slabs[ep.rank])
        return spec.layout, spec.tag, spec.data.copy()

    results = sf.run_spmd(p, body, mode)
    return sf.gather_spectral([sf.SpectralSlab(*r) for r in results])


def roundtrip_field(grid, p, strategy, field,
                    mode=sf.CommMode.SERIAL, pattern=sf.CommPattern.PAIRWISE):
    """inverse(forward(field)) reassembled globally, plus the worst per-rank
    imaginary residue seen while discarding."""
    slabs = sf.scatter_real(field, grid, p)

    def body(ep):
        fp = sf.plan(grid, ep, strategy, pattern)
        spec = sf.forward(fp, slabs[ep.rank])
        out = sf.inverse(fp, spec)
        return out.layout, out.data.copy(), fp.last_imag_residue

    results = sf.run_spmd(p, body, mode)
    back = sf.gather_real([sf.RealSlab(r[0], r[1]) for r in results])
    residue = max(r[2] for r in results)
    return back, residue


def exchange_views(grid, p, strategy, data,
                   mode=sf.CommMode.SERIAL, pattern=sf.CommPattern.PAIRWISE):
    """Run one forward exchange of a global (n0, n1, n2c) complex array and
    return each rank's logical view plus its counter snapshot."""
    n0p = grid.n0 // p

    def body(ep):
        xp = sf.plan_exchange(grid, p, ep.rank, strategy, pattern)
        buf = data[ep.rank * n0p : (ep.rank + 1) * n0p].copy()
        if strategy is sf.Strategy.STRIDED:
            spec = sf.exchange_strided_forward(buf, xp, ep)
        else:
            spec = sf.exchange_transpose_forward(buf, xp, ep)
        return spec.as_logical(), xp.counters.snapshot()

    results = sf.run_spmd(p, body, mode)
    return [r[0] for r in results], [r[1] for r in results]


def random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((grid.n0, grid.n1, grid.n2))


def naive_dft2_r2c(plane):
    """Independent 2D half-spectrum reference built from exponent matrices."""
    n1, n2 = plane.shape
    a = np.arange(n1)
    e1 = np.exp(-2j * np.pi * np.outer(a, a) / n1)
    k = np.arange(n2 // 2 + 1)
    j = np.arange(n2)
    e2 = np.exp(-2j * np.pi * np.outer(k, j) / n2)
    return e1 @ plane.astype(np.complex128) @ e2.T
