//! Exact Clebsch-Gordan, 3j and 6j symbols.

use dlcz::atomic::{clebsch_gordan, wigner_3j, wigner_6j, HalfInt};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h: HalfInt = "1/2".parse()?;
    let c = clebsch_gordan(h, h, h, -h, HalfInt::int(0), HalfInt::int(0));
    println!("<1/2 1/2; 1/2 -1/2 | 0 0> = {c} ≈ {:.6}", c.to_f64());

    let (j1, j2) = (HalfInt::int(1), "3/2".parse::<HalfInt>()?);
    let j: HalfInt = "5/2".parse()?;
    let m: HalfInt = "1/2".parse()?;
    println!("<1 m1; 3/2 m2 | 5/2 1/2>:");
    let mut total = 0.0;
    for m1 in [-1, 0, 1] {
        let m1 = HalfInt::int(m1);
        let m2 = HalfInt::from_twice(m.twice() - m1.twice());
        let c = clebsch_gordan(j1, m1, j2, m2, j, m);
        total += c.to_f64().powi(2);
        println!("  m1 = {m1:>2}, m2 = {m2:>4}: {c}");
    }
    println!("  sum of squares = {total}");

    let four = HalfInt::int(4);
    let three_j = wigner_3j(HalfInt::int(3), HalfInt::int(1), four, HalfInt::int(-3), HalfInt::int(-1), four);
    println!("(3 1 4; -3 -1 4) = {three_j}");
    let six_j = wigner_6j(h, h, HalfInt::int(1), HalfInt::int(4), four, "7/2".parse()?);
    println!("{{1/2 1/2 1; 4 4 7/2}} = {six_j}");
    Ok(())
}
