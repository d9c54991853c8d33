use stochreal_core::expressivity::{scalar_cartography, ClassifyOptions};

fn main() {
    let opts = ClassifyOptions::default();
    let start = std::time::Instant::now();
    let grid = scalar_cartography(1.0, 101, 101, &opts);
    println!("cells: {}, mismatches: {}, elapsed: {:?}", grid.cells.len(), grid.mismatch_count, start.elapsed());
    for c in grid.cells.iter().filter(|c| c.mismatch).take(10) {
        println!("f={:+.3} hn={:+.3} cov={:?}/{} hmc={:?}/{} rnn=({:.1e},{:.1e})/{}",
            c.f, c.hn, c.covariance, c.pipeline_covariance, c.hmc, c.pipeline_hmc,
            c.rnn_curve1_dist, c.rnn_curve2_dist, c.pipeline_rnn);
    }
}
