//! Closed-form delay compensation for a four-path user and the case choice
//! for a few array sizes.

use dam::delay::{choose_compensation_counts, enumerate_alignment_sets, isi_count, proposition1_delays};

fn main() -> dam::Result<()> {
    let n = [1, 3, 4, 5];
    for pre in 1..=n.len() {
        let post = n.len() + 1 - pre;
        let plan = proposition1_delays(&n, pre, post)?;
        let sets = enumerate_alignment_sets(&plan, &n);
        println!(
            "I={pre} R={post}: kappa {:?} mu {:?}, {} aligned ({} extra), {} ISI",
            plan.kappa,
            plan.mu,
            sets.desired.len(),
            sets.l_extra,
            sets.isi.len()
        );
    }
    for (m_t, m_r, l) in [(128, 2, 3), (4, 64, 5), (64, 64, 3), (3, 3, 4)] {
        let c = choose_compensation_counts(m_t, m_r, l, false)?;
        println!(
            "M_t={m_t:3} M_r={m_r:2} L={l}: {} with I={} R={}, {} ISI terms",
            c.case,
            c.pre_count,
            c.post_count,
            isi_count(l, c.pre_count)
        );
    }
    Ok(())
}
