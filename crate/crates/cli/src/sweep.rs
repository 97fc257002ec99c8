//! Independent runs fanned out to worker threads.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::config::{load_config, Overrides, RunSpec};
use crate::error::Result;
use crate::modes::{run, RunOutcome};

/// Loads one spec per file, each writing under `base/<file stem>`.
pub fn load_sweep(files: &[PathBuf], overrides: &Overrides, base: &Path) -> Result<Vec<RunSpec>> {
    let overrides = Overrides {
        out: None,
        ..overrides.clone()
    };
    files
        .iter()
        .map(|f| {
            let mut spec = load_config(f, &overrides)?;
            let stem = f.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| "run".into());
            spec.output_dir = base.join(stem);
            Ok(spec)
        })
        .collect()
}

/// Runs every spec on up to `threads` workers; results keep the input order.
pub fn run_sweep(specs: &[RunSpec], threads: usize) -> Vec<Result<RunOutcome>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunOutcome>>>> = specs.iter().map(|_| Mutex::new(None)).collect();
    let workers = threads.clamp(1, specs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= specs.len() {
                    break;
                }
                let result = run(&specs[k]);
                *slots[k].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every slot is filled"))
        .collect()
}
