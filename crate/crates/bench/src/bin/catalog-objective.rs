//! Serves catalog functions over the line-delimited JSON objective protocol.
//! Doubles as a scripted test child: it can reorder, delay, die or emit garbage.

use std::io::{self, BufRead, Write};
use std::time::Duration;

use aego::testfns;
use clap::Parser;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(about = "Evaluate a catalog function (or `sum`) for requests on stdin")]
struct Args {
    /// Catalog name, or `sum` for the coordinate sum.
    function: String,
    /// Buffer this many requests and answer them in reverse order.
    #[arg(long, default_value_t = 1)]
    shuffle: usize,
    /// Exit without replying once this many requests have arrived.
    #[arg(long)]
    die_after: Option<usize>,
    /// Print a malformed line after this many replies.
    #[arg(long)]
    garbage_after: Option<usize>,
    /// Sleep before every reply.
    #[arg(long, default_value_t = 0)]
    delay_ms: u64,
}

#[derive(Deserialize)]
struct Request {
    id: u64,
    x: Vec<f64>,
}

#[derive(Serialize)]
struct Reply {
    id: u64,
    y: f64,
}

type Eval = Box<dyn Fn(&[f64]) -> f64>;

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let f: Eval = if args.function == "sum" {
        Box::new(|x: &[f64]| x.iter().sum())
    } else {
        let t = testfns::lookup(&args.function)?;
        Box::new(move |x: &[f64]| t.eval(x))
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut held: Vec<Request> = Vec::new();
    let (mut received, mut replied) = (0usize, 0usize);
    let mut flush = |held: &mut Vec<Request>, out: &mut io::StdoutLock| -> anyhow::Result<()> {
        while let Some(r) = held.pop() {
            if args.delay_ms > 0 {
                std::thread::sleep(Duration::from_millis(args.delay_ms));
            }
            if args.garbage_after == Some(replied) {
                writeln!(out, "this is not json")?;
            }
            writeln!(out, "{}", serde_json::to_string(&Reply { id: r.id, y: f(&r.x) })?)?;
            out.flush()?;
            replied += 1;
        }
        Ok(())
    };
    for line in io::stdin().lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        received += 1;
        if args.die_after == Some(received) {
            std::process::exit(3);
        }
        held.push(serde_json::from_str(&line)?);
        if held.len() >= args.shuffle {
            flush(&mut held, &mut out)?;
        }
    }
    flush(&mut held, &mut out)
}
