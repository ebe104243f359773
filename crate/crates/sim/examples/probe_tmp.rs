use star_tunnel_sim::randgen::random_scenario;
use star_tunnel_sim::scenario::Scenario;
use star_tunnel_sim::sim::simulate_with;

fn main() {
    let file = random_scenario(93);
    let sc = Scenario::from_file(&file).unwrap();
    let _ = simulate_with(&sc, |v| {
        if v.k >= 48 && v.k <= 60 {
            println!("k={} rho={:.3} r0=({:.2},{:.2}) path_end={:.2} trunc={:?} goal_reach={:?} reused={} pts={} s_n={:.2} cost={:.1}",
                v.k, v.record.rho, v.record.r0[0], v.record.r0[1],
                v.record.path_end_s, v.path.truncated_at, v.path.goal_reached_at,
                v.record.path_reused, v.record.path_points,
                v.record.s_n.unwrap_or(f64::NAN), v.record.cost.unwrap_or(f64::NAN));
        }
    }).map_err(|e| println!("err: {e}"));
}
