use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::wrap_pymodule;

fn run(code: &str) -> PyResult<()> {
    Python::initialize();
    Python::attach(|py| {
        let module = wrap_pymodule!(robust_risk_py::robust_risk_module)(py);
        let globals = PyDict::new(py);
        globals.set_item("rr", module)?;
        py.run(&std::ffi::CString::new(code).unwrap(), Some(&globals), None)
    })
}

#[test]
fn robust_risk_from_python() {
    run(r#"
xs = [0.0, 1.0, 10.0]
r = rr.robust_risk(xs, rr.CostRates.constant(1.0, 1.0), rr.RiskMeasure.ml())
assert r.risk == -5.0, r
assert r.deviation == 5.0, r
assert str(rr.RiskMeasure("EVaR(0.00145)")) == "EVaR(0.00145)"
assert rr.robust_risk(xs, rr.CostRates.constant(0.0, 1.0), rr.RiskMeasure.es(0.5), kind="B").risk == 0.0
"#)
    .unwrap();
}

#[test]
fn errors_map_to_python_exceptions() {
    run(r#"
for bad in (lambda: rr.RiskMeasure.evar(0.0), lambda: rr.CostRates.constant(-1.0, 1.0), lambda: rr.robust_risk([], rr.CostRates.constant(1, 1), rr.RiskMeasure.el())):
    try:
        bad()
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
try:
    rr.run_report("measure", "/nonexistent/p.csv", "g.csv", "l.csv")
except OSError:
    pass
else:
    raise AssertionError("expected OSError")
"#)
    .unwrap();
}

#[test]
fn distributions_and_garch() {
    run(r#"
d = rr.InnovationDist("sged", 1.4, 1.2)
assert abs(d.cdf(d.quantile(0.3)) - 0.3) < 1e-9
xs = d.sample(5, 3)
assert xs == d.sample(5, 3) and len(xs) == 5
path = rr.garch_simulate(2000, 5, omega=0.05, a=0.1, b=0.85)
f = rr.garch_fit(path)
m, s = f.forecast_moments()
assert s > 0 and len(f.sigmas) == 2000
"#)
    .unwrap();
}
