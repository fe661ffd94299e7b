"""Smoke test for the diqkd_cc extension module.

Build and install first:
    cd crates/python && maturin develop --release
Then run:
    python python/smoke_test.py
"""

import math

import diqkd_cc


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    close(diqkd_cc.idmax_closed_form(2), 2 * math.sqrt(2), 1e-12)
    close(diqkd_cc.idmax_closed_form(3), 2.87293, 1e-5)
    close(diqkd_cc.local_visibility(2), 1 / math.sqrt(2), 1e-12)

    t = diqkd_cc.max_entangled_table(3)
    assert (t.d, t.n_a, t.n_b) == (3, 2, 3)
    assert t.max_residual() < 1e-9
    close(t.cglmp_value(), diqkd_cc.idmax_closed_form(3), 1e-10)
    close(sum(t.to_list()), 6.0, 1e-9)
    again = diqkd_cc.CorrelationTable.from_text(t.to_text())
    close(again.prob(1, 1, 2, 3), t.prob(1, 1, 2, 3), 1e-14)

    observed = t.mix(0.9)
    q_l, q_nl, residual = diqkd_cc.max_local_weight(observed, t)
    close(q_l, diqkd_cc.q_l_analytic(3, 0.9), 1e-6)
    close(q_l + q_nl, 1.0, 1e-8)
    assert residual < 1e-8

    assert diqkd_cc.is_local(t.mix(diqkd_cc.local_visibility(3)))
    assert not diqkd_cc.is_local(t.mix(diqkd_cc.local_visibility(3) + 1e-2))

    close(diqkd_cc.critical_visibility(3), 0.82043, 5e-5)
    close(diqkd_cc.critical_visibility(3, "cglmp"), 0.82101, 5e-5)
    close(diqkd_cc.rub_lp(3, 0.9).r_ub, diqkd_cc.rub_analytic(3, 0.9).r_ub, 1e-6)

    pts = diqkd_cc.keyrate_curve(3, 0.8, 1.0, 5, state="cglmp")
    assert all(p.branch == "lp-cglmp-state" for p in pts)
    assert pts[0].v == 0.8 and pts[-1].v == 1.0
    assert all(b.q_l <= a.q_l + 1e-12 for a, b in zip(pts, pts[1:]))

    close(diqkd_cc.vcrit_asymptotic() * diqkd_cc.idmax_asymptotic(), 2.239, 5e-4)
    close(diqkd_cc.pa_zero_visibility(3, "cglmp"), 0.687, 0.01)

    try:
        diqkd_cc.critical_visibility(3, "cglmp", "analytic")
    except ValueError:
        pass
    else:
        raise AssertionError("analytic method accepted for the CGLMP state")

    print("smoke test passed")


if __name__ == "__main__":
    main()
