// Own test binary: it sets the worker variable, which is process-wide.

use std::fs;

use helmscat_lab::experiment::WORKERS_ENV;
use helmscat_lab::{presets, run_experiment};

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let d = tempfile::tempdir().unwrap();
        let mut c = presets::corner_scatter();
        c.levels = vec![0.1, 0.05];
        c.k_range.max = 3.0;
        c.output_dir = Some(d.path().display().to_string());
        std::env::set_var(WORKERS_ENV, workers);
        let out = run_experiment(&c).unwrap();
        assert_eq!(out.manifest.run.workers, workers.parse::<usize>().unwrap());
        outputs.push(fs::read(d.path().join("sweep.csv")).unwrap());
    }
    std::env::remove_var(WORKERS_ENV);
    assert_eq!(outputs[0], outputs[1]);
}
