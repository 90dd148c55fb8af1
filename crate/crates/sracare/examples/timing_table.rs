// Licensed under the Apache-2.0 license

//! Print the bootstrap timing model for a range of image sizes.
//!
//! ```bash
//! cargo run --example timing_table
//! ```

use sracare::timing::{report, CycleCosts};

fn main() {
    let costs = CycleCosts::reference();
    println!("reference cycle costs at {} MHz:", costs.frequency_hz / 1_000_000);
    println!(
        "  first frame : {} / {} cycles (plain / secured)",
        costs.first_frame_without, costs.first_frame_with
    );
    println!(
        "  later frames: {} / {} cycles each",
        costs.per_frame_without, costs.per_frame_with
    );

    println!("\nframes  plain_cycles  secured_cycles  t_delta  d_delta_us  overhead");
    for frames in [1u32, 2, 4, 6, 8, 16, 32] {
        let rep = report(&costs, frames);
        println!(
            "{frames:>6}  {:>12}  {:>14}  {:>7}  {:>10.2}  {:>7.2}%",
            rep.total_cycles_without,
            rep.total_cycles_with,
            rep.t_delta_cycles,
            rep.d_delta_seconds * 1e6,
            rep.overhead_fraction * 100.0
        );
    }

    let six = report(&costs, 6);
    println!(
        "\nthe 5.6 KB reference application (6 frames) pays {} extra cycles,\n\
{:.2} us at 100 MHz, an {:.0}% longer boot in exchange for verification\n\
and recovery.",
        six.t_delta_cycles,
        six.d_delta_seconds * 1e6,
        (six.overhead_fraction * 100.0).round()
    );
}
