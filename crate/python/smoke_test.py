"""Smoke test for the Python bindings. Run after `pip install crates/python`."""

import math
import tempfile
from pathlib import Path

import robust_risk as rr


def main() -> None:
    xs = [0.3, -1.2, 2.5, 0.1, -0.4, 1.7, -2.2, 0.9]

    # equal costs under EL give the median-type quantile
    res = rr.robust_risk(xs, rr.CostRates.constant(0.5, 0.5), rr.RiskMeasure.el())
    risk, dev = rr.closed_form(xs, rr.CostRates.constant(0.5, 0.5))
    assert res.risk == risk and abs(res.deviation - dev) < 1e-12, (res, risk, dev)
    assert abs(sum(res.weights) - 1.0) < 1e-12

    es = rr.RiskMeasure("ES(0.25)")
    loss = rr.loss_profile(xs, rr.CostRates.constant(0.1, 0.3), 0.0)
    value, _ = rr.dual_sup(loss, es)
    assert abs(value - rr.dual_sup_lp(loss, es)) < 1e-8

    sstd = rr.InnovationDist("sstd", 6.0, 0.9)
    q = sstd.quantile(0.01)
    assert abs(sstd.cdf(q) - 0.01) < 1e-9
    assert sstd.es(0.025) > -sstd.quantile(0.025)
    assert abs(rr.InnovationDist().expectile(0.00145) - 2.326841277) < 1e-6

    path = rr.garch_simulate(3000, seed=1, omega=0.05, a=0.1, b=0.85)
    fit = rr.garch_fit(path, "norm")
    assert fit.converged and abs(fit.a + fit.b - 0.95) < 0.05, fit
    var99 = rr.risk_forecast("GARCH-norm", path[-250:], rr.RiskMeasure.var(0.01))
    assert math.isfinite(var99) and var99 > 0

    with tempfile.TemporaryDirectory() as tmp:
        n = rr.simulate_market(7, tmp)
        assert n == 300
        d = Path(tmp)
        csv = rr.run_report(
            "select",
            d / "prices.csv",
            d / "yield_g.csv",
            d / "yield_l.csv",
            overrides=[("models", "HS,FHS"), ("split", "none")],
        )
        assert csv.splitlines()[0].startswith("split,model,measure,days")
        assert len(csv.splitlines()) == 1 + 8

    try:
        rr.RiskMeasure.es(1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid alpha accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
