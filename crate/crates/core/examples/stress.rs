use std::fmt::Write as _;
use nocgate::config::{RunMode, SimConfig};
use nocgate::engine::{CellKey, Sim};
use nocgate::rng::Rng;
use nocgate::topology::{Coord, MeshConfig};
use nocgate::{Pattern, Policy, RouteAction};

fn oracle_turn(src: Coord, dst: Coord, yx: bool) -> Coord {
    if yx { Coord::new(dst.row, src.col) } else { Coord::new(src.row, dst.col) }
}

fn oracle_min(flows: &[(Coord, Coord)]) -> usize {
    let f = flows.len();
    let mut best = usize::MAX;
    for mask in 0..(1u32 << f) {
        let mut routers: Vec<Coord> = Vec::new();
        for (i, &(s, d)) in flows.iter().enumerate() {
            let t = oracle_turn(s, d, mask & (1 << i) != 0);
            if !routers.contains(&t) { routers.push(t); }
        }
        best = best.min(routers.len());
    }
    best
}

/// Flow sets whose turn candidates never coincide with any flow endpoint,
/// so turning-router wake counts are unconfounded by ejections.
fn gen_flows(mesh: MeshConfig, count: usize, rng: &mut Rng) -> Vec<(Coord, Coord)> {
    'outer: loop {
        let mut flows: Vec<(Coord, Coord)> = Vec::new();
        let mut tries = 0;
        while flows.len() < count {
            tries += 1;
            if tries > 4000 { continue 'outer; }
            let src = mesh.coord(rng.gen_range(16) as usize);
            let dst = mesh.coord(rng.gen_range(16) as usize);
            if src.row == dst.row || src.col == dst.col || flows.contains(&(src, dst)) { continue; }
            let mut cand = flows.clone();
            cand.push((src, dst));
            let _ = &cand; // unconstrained instances
            flows = cand;
        }
        return flows;
    }
}

fn main() {
    let mesh = MeshConfig::new(4, 4).unwrap();
    let (alpha, p) = (0.3f64, 0.2f64);
    {
        let mut exact = 0; let mut plus1 = 0; let mut worse = 0;
        for rep_set in 0..100u64 {
            let set = rep_set % 20;
            let rep = rep_set / 20;
            let mut rng = Rng::stream(0xACC2 + rep * 0x1000, set);
            let _ = &mut rng;
            let mut srng = Rng::stream(0xACC2, set);
            let count = 3 + (srng.gen_range(8) as usize);
            let flows = gen_flows(mesh, count, &mut srng);
            let mut rng = Rng::stream(0xBEEF + rep, set);
            let mut trace = String::from("cycle,src,dst,length\n");
            for cycle in 0..230_000u64 {
                for &(s, d) in &flows {
                    if rng.gen_bool(p) {
                        let _ = writeln!(trace, "{cycle},{},{},1", mesh.flat(s), mesh.flat(d));
                    }
                }
            }
            let path = std::env::temp_dir().join(format!("sweep_{set}_{}.csv", std::process::id()));
            std::fs::write(&path, &trace).unwrap();
            let mut cfg = SimConfig::default();
            cfg.mesh.rows = 4; cfg.mesh.cols = 4;
            cfg.traffic.patterns = vec![Pattern::Trace];
            cfg.traffic.trace_path = Some(path.to_string_lossy().into_owned());
            cfg.run.mode = RunMode::Cycles;
            cfg.run.max_cycles = 230_000;
            cfg.run.seed = 7000 + set + rep * 131;
            cfg.pg.mode_up_threshold = 0;
            cfg.marl.count_ejects_as_turns = false;
            cfg.marl.alpha = alpha;
            let key = CellKey { policy: Policy::CafeenFull, pattern: Pattern::Trace, pir: 0.0 };
            let mut sim = Sim::new(&cfg, key).unwrap();
            while !sim.done() {
                if sim.cycle == 200_000 { sim.set_exploration(0.0); }
                if sim.cycle == 215_000 { sim.set_learning_rate(0.02); }
                sim.step().unwrap();
            }
            let _ = std::fs::remove_file(&path);
            let mut learned: Vec<Coord> = Vec::new();
            for &(s, d) in &flows {
                let a = sim.greedy_route(s, d);
                let t = oracle_turn(s, d, a == RouteAction::Yx);
                if !learned.contains(&t) { learned.push(t); }
            }
            let opt = oracle_min(&flows);
            let res = if learned.len() == opt { exact += 1; plus1 += 1; "OK " }
            else if learned.len() == opt + 1 { plus1 += 1; "+1 " }
            else { worse += 1; "BAD" };
            println!("set {set:>2} rep {rep} F={count}: {res} learned {} opt {opt}", learned.len());
        }
        println!("alpha={alpha:<4} p={p}: exact {exact}/100, within+1 {plus1}/100, worse {worse}");
    }
}
