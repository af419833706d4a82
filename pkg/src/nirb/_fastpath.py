"""Compiled single-point online solve.

The generic online path costs a few hundred microseconds in interpreter and
allocation overhead, which erodes the point of a reduced solve at desk
scales.  When the decomposition is built from the numerically describable
kernels (power-scaled complex exponentials and coordinate ratios), the whole
pipeline (coefficient vector, weights, reduced assembly, LU solve, factored
residual norm, output) is compiled into one closure.  Everything the kernel
touches is captured as plain arrays, so the closure is safe to share across
threads.
"""

import numpy as np

import numba

from .nonintrusive import TwoStageDecomposition

VARIANT_CODES = {"binverse": 0, "delta": 1}


def _side_arrays(decomp):
    """Numeric description of one decomposition, or raise if not encodable."""
    if not isinstance(decomp, TwoStageDecomposition):
        raise ValueError("fast path supports two-stage decompositions only")
    d = decomp.n_terms
    pidx, powers, locs, ops = [], [], [], []
    for fam, model, magic in zip(decomp.families_, decomp.stage1_models_, decomp.magic_locations_):
        desc = fam.descriptor or {}
        if desc.get("kind") != "exp_power" or model.rank_ != d:
            raise ValueError(f"kernel {fam.name!r} is not fast-path encodable")
        pidx.append(desc["param_index"])
        powers.append(desc["power"])
        locs.append(magic)
        ops.append(model.B_ if decomp.variant == "binverse" else model.Delta_)
    ratios = []
    for feat in decomp.features_:
        desc = feat.descriptor or {}
        if desc.get("kind") != "ratio":
            raise ValueError(f"feature {feat.name!r} is not fast-path encodable")
        ratios.append((desc["num_index"], desc["den_index"]))
    # weights apply the inverse cross matrix through its triangular factors:
    # scan "mu": beta = Gamma^-t (B^-1 z);  scan "x": beta = B^-t (Gamma^-1 z)
    zeta = decomp.zeta_
    if zeta.scan == "mu":
        lower, lower_unit = zeta.B_, True
        upper, upper_unit = zeta.Gamma_.T, False
    else:
        lower, lower_unit = zeta.Gamma_, False
        upper, upper_unit = zeta.B_.T, True
    return {
        "n_fam": len(decomp.families_),
        "d": d,
        "pidx": np.array(pidx, dtype=np.int64),
        "powers": np.array(powers, dtype=np.int64),
        "locs": np.ascontiguousarray(np.array(locs, dtype=np.float64)),
        "ops": np.ascontiguousarray(np.array(ops, dtype=np.complex128)),
        "variant": VARIANT_CODES[decomp.variant],
        "ratios": np.array(ratios, dtype=np.int64).reshape(len(ratios), 2),
        "selected_p": np.array(decomp.selected_p_, dtype=np.int64),
        "lower": np.ascontiguousarray(lower, dtype=np.complex128),
        "lower_unit": lower_unit,
        "upper": np.ascontiguousarray(upper, dtype=np.complex128),
        "upper_unit": upper_unit,
    }


def build_online_kernel(solver):
    """Compile a closure ``mu -> (gamma, qoi, rho2)`` for a fitted solver."""
    if solver.projection != "hermitian":
        raise ValueError("fast path requires the hermitian projection")
    mat = _side_arrays(solver.matrix_decomposition_)
    rhs = _side_arrays(solver.rhs_decomposition_)

    dz, n_hat = solver.reduced_operators_.shape[:2]
    dzr = solver.reduced_rhs_.shape[0]
    ahat_flat = np.ascontiguousarray(solver.reduced_operators_.reshape(dz, n_hat * n_hat))
    chat = np.ascontiguousarray(solver.reduced_rhs_)
    ell_hat = np.ascontiguousarray(solver.output_functional_)
    factor_hi_t = solver._factor_hi_t
    factor_lo_t = solver._factor_lo_t
    use_lo = factor_lo_t.shape[1] > 0
    with_reduced_residual = bool(solver._factor_projected_)
    beta_lb = float(solver.beta_lb_)
    box_lo = np.asarray(solver.domain_.lows, dtype=np.float64)
    box_hi = np.asarray(solver.domain_.highs, dtype=np.float64)

    m_pidx, m_pow, m_locs = mat["pidx"], mat["powers"], mat["locs"]
    m_ops, m_ratios, m_selp = mat["ops"], mat["ratios"], mat["selected_p"]
    m_variant, m_d, m_nfam = mat["variant"], mat["d"], mat["n_fam"]
    m_lower, m_lower_unit = mat["lower"], mat["lower_unit"]
    m_upper, m_upper_unit = mat["upper"], mat["upper_unit"]
    r_pidx, r_pow, r_locs = rhs["pidx"], rhs["powers"], rhs["locs"]
    r_ops, r_ratios, r_selp = rhs["ops"], rhs["ratios"], rhs["selected_p"]
    r_variant, r_d, r_nfam = rhs["variant"], rhs["d"], rhs["n_fam"]
    r_lower, r_lower_unit = rhs["lower"], rhs["lower_unit"]
    r_upper, r_upper_unit = rhs["upper"], rhs["upper_unit"]

    # reassociation only: NaN/inf semantics stay intact so a degenerate pivot
    # still surfaces as NaN in the caller
    fast_flags = {"reassoc", "contract"}

    @numba.njit(cache=False, fastmath=fast_flags, error_model="numpy")
    def _weights(mu, pidx, powers, locs, ops, variant, ratios, selp,
                 lower, lower_unit, upper, upper_unit, d, n_fam):
        z = np.empty(d * n_fam + ratios.shape[0], dtype=np.complex128)
        for f in range(n_fam):
            w = mu[pidx[f]]
            scale = 1.0
            for _ in range(powers[f]):
                scale *= w
            s = np.empty(d, dtype=np.complex128)
            for t in range(d):
                arg = w * locs[f, t]
                s[t] = scale * complex(np.cos(arg), np.sin(arg))
            if variant == 0:  # forward substitution on unit lower triangular B
                for l in range(d):
                    acc = s[l]
                    for m in range(l):
                        acc -= ops[f, l, m] * z[f * d + m]
                    z[f * d + l] = acc
            else:  # multiply by Delta
                for m in range(d):
                    acc = 0.0 + 0.0j
                    for l in range(d):
                        acc += s[l] * ops[f, l, m]
                    z[f * d + m] = acc
        for t in range(ratios.shape[0]):
            z[d * n_fam + t] = mu[ratios[t, 0]] / mu[ratios[t, 1]]
        nsel = selp.shape[0]
        beta = np.empty(nsel, dtype=np.complex128)
        for t in range(nsel):  # gather, then two triangular solves in place
            beta[t] = z[selp[t]]
        for l in range(nsel):
            acc = beta[l]
            for m in range(l):
                acc -= lower[l, m] * beta[m]
            beta[l] = acc if lower_unit else acc / lower[l, l]
        for l in range(nsel - 1, -1, -1):
            acc = beta[l]
            for m in range(l + 1, nsel):
                acc -= upper[l, m] * beta[m]
            beta[l] = acc if upper_unit else acc / upper[l, l]
        return beta

    @numba.njit(cache=False, fastmath=fast_flags, error_model="numpy")
    def kernel(mu):
        beta = _weights(mu, m_pidx, m_pow, m_locs, m_ops, m_variant, m_ratios, m_selp,
                        m_lower, m_lower_unit, m_upper, m_upper_unit, m_d, m_nfam)
        beta_r = _weights(mu, r_pidx, r_pow, r_locs, r_ops, r_variant, r_ratios, r_selp,
                          r_lower, r_lower_unit, r_upper, r_upper_unit, r_d, r_nfam)
        a_red = (beta @ ahat_flat).reshape(n_hat, n_hat)
        c_red = beta_r @ chat
        lu = a_red.copy()
        g = c_red.copy()
        for k in range(n_hat):  # LU, partial pivoting on the 1-norm magnitude
            p = k
            big = abs(lu[k, k].real) + abs(lu[k, k].imag)
            for i in range(k + 1, n_hat):
                mag = abs(lu[i, k].real) + abs(lu[i, k].imag)
                if mag > big:
                    big = mag
                    p = i
            if p != k:
                for j in range(n_hat):
                    tmp = lu[k, j]
                    lu[k, j] = lu[p, j]
                    lu[p, j] = tmp
                tmp2 = g[k]
                g[k] = g[p]
                g[p] = tmp2
            akk = lu[k, k]
            for i in range(k + 1, n_hat):
                fct = lu[i, k] / akk
                lu[i, k] = fct
                for j in range(k + 1, n_hat):
                    lu[i, j] -= fct * lu[k, j]
                g[i] -= fct * g[k]
        gamma = np.empty(n_hat, dtype=np.complex128)
        for i in range(n_hat - 1, -1, -1):
            acc = g[i]
            for j in range(i + 1, n_hat):
                acc -= lu[i, j] * gamma[j]
            gamma[i] = acc / lu[i, i]

        y = np.empty(dz * n_hat + dzr, dtype=np.complex128)
        for r in range(dz):
            br = beta[r]
            for i in range(n_hat):
                y[r * n_hat + i] = br * gamma[i]
        for r in range(dzr):
            y[dz * n_hat + r] = -beta_r[r]
        t_vec = y @ factor_hi_t
        rho2 = 0.0
        for i in range(t_vec.shape[0]):
            rho2 += t_vec[i].real * t_vec[i].real + t_vec[i].imag * t_vec[i].imag
        if use_lo:
            t_lo = y.astype(np.complex64) @ factor_lo_t
            for i in range(t_lo.shape[0]):
                rho2 += np.float64(t_lo[i].real) ** 2 + np.float64(t_lo[i].imag) ** 2
        if with_reduced_residual:
            s_vec = a_red @ gamma - c_red
            for i in range(n_hat):
                rho2 += s_vec[i].real * s_vec[i].real + s_vec[i].imag * s_vec[i].imag
        qoi = 0.0 + 0.0j
        for i in range(n_hat):
            qoi += ell_hat[i] * gamma[i]
        bound = np.sqrt(rho2) / beta_lb if rho2 > 0.0 else rho2
        extrapolated = False
        for i in range(mu.shape[0]):
            if mu[i] < box_lo[i] or mu[i] > box_hi[i]:
                extrapolated = True
        return gamma, qoi, bound, extrapolated

    kernel(np.asarray(solver.domain_.center(), dtype=np.float64))  # compile now
    return kernel
