//! Build the six-node reference graph and inspect its Laplacian.
//!
//! cargo run --example topology

use consensus_detect::topology::NetworkGraph;

fn main() -> consensus_detect::Result<()> {
    let g = NetworkGraph::new(6, &[(0, 1), (1, 2), (1, 3), (2, 3), (3, 4), (3, 5)])?;
    println!("degrees   {:?}", g.degrees());
    for i in 0..g.node_count() {
        println!("N({}) = {:?}", i + 1, g.neighbors(i).iter().map(|j| j + 1).collect::<Vec<_>>());
    }
    println!("connected {}", g.is_connected());
    println!("L ={}", g.laplacian());
    Ok(())
}
