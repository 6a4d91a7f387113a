use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

fn with_module(code: &std::ffi::CStr) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "lora_tbma_py").unwrap();
        lora_tbma_py::register(&m).unwrap();
        let globals = PyDict::new(py);
        globals.set_item("lt", m).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn round_trip_through_python() {
    with_module(
        c"
cfg = lt.ModulationConfig(64, spreading_rate=0.5)
modem = lt.Modem(cfg)
for m in range(64):
    assert modem.demodulate(modem.transmit(m)) == m
plain = lt.ModulationConfig(64)
y = lt.modulate_single_tone(7, plain)
assert lt.demodulate(lt.despread(lt.spread(y, cfg), cfg), plain) == 7
x = [float(i % 5) for i in range(16)]
back = lt.dct_inverse(lt.dct_forward(x))
assert max(abs(a - b) for a, b in zip(x, back)) < 1e-12
",
    );
}

#[test]
fn errors_become_value_error() {
    with_module(
        c"
try:
    lt.Modem(lt.ModulationConfig(8)).transmit(8)
    raise AssertionError('expected ValueError')
except ValueError as e:
    assert 'out of range' in str(e)
try:
    lt.link_budget('meo')
    raise AssertionError('expected ValueError')
except ValueError as e:
    assert 'isl-geo' in str(e)
",
    );
}

#[test]
fn estimation_and_sweep() {
    with_module(
        c"
p = lt.discretize_gaussian(100.3, 16.0, 256)
assert abs(lt.ml_estimate(p, 16.0) - 100.3) <= 0.1 + 1e-9
assert lt.kl_divergence(p, p) < 1e-12
theta_hat, r = lt.tbma_trial(128.0, 16.0, 1000, 30.0, seed=3)
assert abs(theta_hat - 128.0) < 3.0 and abs(sum(r) - 1.0) < 1e-2
assert abs(lt.link_budget('ul')['fspl_db'] - 147.2) <= 0.1
csv, aggs = lt.sweep('trials = 2', [('users', '[10]'), ('snr_db', '[10.0]')])
assert csv.startswith('scheme,L,snr_db,theta_true,theta_hat,sq_err,kl,seed,trial\\n')
assert len(csv.splitlines()) == 5 and len(aggs) == 2
",
    );
}
