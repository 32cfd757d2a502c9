use ness_core::superspace::OrderingScheme;
use ness_core::{solve_ness, ModelParams, SweepSchedule};

fn main() {
    let delta: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let iters: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(6);
    let max_sweeps: usize = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(100);
    let ramp: f64 = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(0.10);
    let params = ModelParams::uniform(10, 1.0, delta, 0.0, 1.0, 1.0, 0.0);
    let scheme = OrderingScheme::rln(10);
    let schedule = SweepSchedule {
        max_bond: 40,
        energy_floor: 1e-6,
        measure_every_sweep: false,
        max_sweeps,
        local_solver_iters: iters,
        ramp_threshold: ramp,
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    let r = solve_ness(&params, &scheme, &schedule).unwrap();
    println!(
        "delta={delta} iters={iters} ramp={ramp}: E={:.3e} sweeps={} stop={:?} J={:.6} wall={:.1}s",
        r.final_energy(), r.sweeps(), r.stop_reason, r.mean_current(),
        t0.elapsed().as_secs_f64()
    );
    let e: Vec<String> = r.energy_history.iter().skip(30).step_by(8).map(|x| format!("{x:.1e}")).collect();
    println!("energies(from 30, step8): {:?}", e);
}
