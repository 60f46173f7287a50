//! Head-on encounters with the two reference baselines.
//!
//! Non-cooperative agents drive straight at each other and collide when the closing gap runs
//! out; zero-velocity agents never move and time out. Run with
//! `cargo run --release --example baseline_head_on`.

use crowdnav::eval::{
    evaluate_with_logs, generate_head_on_suite, head_on_collision_time, CaseResult, EvalOptions, EvalPolicy,
};
use crowdnav::sim::{PolicyTag, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sim = SimConfig::default();
    let suite = generate_head_on_suite(10, 7, &sim);
    let opts = EvalOptions::default();

    let (outcomes, _) = evaluate_with_logs(EvalPolicy::Baseline(PolicyTag::NonCooperative), &suite, &opts)?;
    println!("non-cooperative (dt = {} s)", sim.dt);
    println!(
        "{:>4} {:>10} {:>12} {:>10}",
        "case", "gap (m)", "closed form", "simulated"
    );
    for (scenario, case) in suite.scenarios.iter().zip(&outcomes.cases) {
        let a = &scenario.agents;
        let gap = a[0].start.distance(a[1].start) - a[0].radius - a[1].radius;
        println!(
            "{:>4} {:>10.3} {:>12.3} {:>10.3}",
            case.case,
            gap,
            head_on_collision_time(scenario),
            case.collision_time.unwrap_or(f64::NAN)
        );
    }

    let stuck = evaluate_with_logs(EvalPolicy::Baseline(PolicyTag::ZeroVelocity), &suite, &opts)?.0;
    let n_stuck = stuck.cases.iter().filter(|c| c.result == CaseResult::Stuck).count();
    println!("zero-velocity: {n_stuck}/{} cases stuck", suite.len());
    Ok(())
}
