//! Size of the unpruned search space C(Q,d)·d!·d! for a few demand levels.
//!
//! cargo run --example theory_table

use ridepool::metrics::{log10_big, theoretical_search_space};

fn main() {
    println!("{:>6} {:>2} {:>8}  exact", "Q", "d", "log10");
    for q in [100u64, 500, 2000, 8000] {
        for d in 2..=8u64 {
            let s = theoretical_search_space(q, d);
            let digits = s.to_string();
            let shown = if digits.len() > 24 {
                format!("{}…({} digits)", &digits[..12], digits.len())
            } else {
                digits
            };
            println!("{q:>6} {d:>2} {:>8.2}  {shown}", log10_big(&s));
        }
    }
}
