use blocklim::assemble::assemble_system;
use blocklim::fixtures;
use blocklim::kla::run_kla;
use blocklim::sla::{run_sla1, run_sla2, SlaOptions};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "trilithon".into());
    match which.as_str() {
        "trilithon" => {
            let m = fixtures::trilithon();
            let sys = assemble_system(&m).unwrap();
            let t0 = std::time::Instant::now();
            let s2 = run_sla2(&sys, &SlaOptions::default()).unwrap();
            println!("trilithon unreinforced SLA2: lambda = {:.6} iters={} conv={} ({:?})",
                s2.lambda, s2.iterations, s2.converged, t0.elapsed());
            println!("  history: {:?}", s2.history);
            let s1 = run_sla1(&sys, &SlaOptions { alpha: 0.1, ..Default::default() }).unwrap();
            println!("trilithon unreinforced SLA1(0.1): lambda = {:.6}", s1.lambda);
            let (k, mech) = run_kla(&sys, &[], &SlaOptions::default()).unwrap();
            println!("trilithon unreinforced KLA: lambda = {:.6} iters={}", k.lambda, k.iterations);
            println!("  hinges: {:?}", mech.hinges);
            println!("  slidings: {:?}", mech.slidings);
            println!("  openings>0: {:?}", mech.openings.iter().filter(|o| o.opening > 1e-9).collect::<Vec<_>>());
            for n in 1..=4 {
                let m = fixtures::trilithon_reinforced(n);
                let sys = assemble_system(&m).unwrap();
                let s1 = run_sla1(&sys, &SlaOptions { alpha: 0.1, ..Default::default() }).unwrap();
                let s2 = run_sla2(&sys, &SlaOptions::default()).unwrap();
                let (k, mech) = run_kla(&sys, &[], &SlaOptions::default()).unwrap();
                println!("reinforced n={n}: sla1={:.4} sla2={:.4} kla={:.4} R={:?} slidings={:?}",
                    s1.lambda, s2.lambda, k.lambda, s1.r.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(), mech.slidings);
            }
        }
        "arch" => {
            let m = fixtures::arch();
            let sys = assemble_system(&m).unwrap();
            let t0 = std::time::Instant::now();
            let s2 = run_sla2(&sys, &SlaOptions::default()).unwrap();
            println!("arch unreinforced SLA2: lambda = {:.4} N iters={} conv={} ({:?})",
                s2.lambda, s2.iterations, s2.converged, t0.elapsed());
            let (k, mech) = run_kla(&sys, &[], &SlaOptions::default()).unwrap();
            println!("arch KLA: lambda = {:.4} iters={}", k.lambda, k.iterations);
            println!("  hinges: {:?}", mech.hinges);
            println!("  slidings: {:?}", mech.slidings);
        }
        _ => eprintln!("unknown probe"),
    }
}
