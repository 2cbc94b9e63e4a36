"""Smoke test for the betolo Python extension."""

import math

import betolo


def check_kt_functions():
    assert betolo.log_kt_potential(0, 0.0) == 0.0
    assert abs(betolo.log_kt_potential(1, 1.0)) < 1e-15
    assert abs(betolo.log_kt_potential(2, 2.0) - math.log(1.5)) < 1e-12
    assert abs(betolo.kt_bet_fraction(2, 1.0) - 0.5) < 1e-15
    w = betolo.lambert_w(math.e)
    assert abs(w - 1.0) < 1e-14
    assert betolo.kt_regret_bound(1000, 1.0) > 0
    assert betolo.kt_exact_dual_bound(1000, 1.0) > 0


def check_engines():
    kt = betolo.KtOlo(2)
    ctw = betolo.CtwOlo(2, depth=3)
    for g in betolo.markov_gradients([0.6, 0.8], 500, order=1, flip=0.95, seed=1):
        for e in (kt, ctw):
            e.action()
            e.update(g)
        assert ctw.round_touches == 8
        assert ctw.log_wealth >= ctw.log_potential - 1e-9
    assert ctw.wealth > kt.wealth
    try:
        kt.update([1.0, 1.0])
    except ValueError:
        pass
    else:
        raise AssertionError("gradient outside the unit ball accepted")


def check_verify_and_run():
    suites = betolo.verify(depth=3)
    assert suites and all(passed for _, passed, _, _ in suites), suites
    curves = betolo.run_config("algorithms = kt, ctw\nsynthetic = markov_sign\nrounds = 200\ndepths = 2\n", seed=5)
    assert all(len(c) == 200 for c in curves.values())
    assert "kt" in curves


if __name__ == "__main__":
    check_kt_functions()
    check_engines()
    check_verify_and_run()
    print("smoke test passed")
