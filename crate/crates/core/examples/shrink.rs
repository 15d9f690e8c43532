//! The two scalar proximal maps behind every split-Bregman update.
use l1_obstacle::penalty::{shrink, shrink_plus};

fn main() {
    let c = 1.0;
    println!("{:>6} {:>12} {:>8}", "z", "shrink_plus", "shrink");
    for i in -6..=6 {
        let z = 0.5 * i as f64;
        println!("{z:>6.2} {:>12.3} {:>8.3}", shrink_plus(z, c), shrink(z, c));
    }
}
