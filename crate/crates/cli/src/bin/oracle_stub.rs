//! Scripted detector peer speaking the oracle wire protocol on stdio or TCP.

use std::io::{self, BufReader};
use std::net::TcpListener;
use std::process::ExitCode;

use clap::Parser;
use lidar_gsa::oracle::wire::{serve_stub, StubOptions};

#[derive(Parser)]
#[command(about = "Scripted oracle peer for protocol tests")]
struct Args {
    /// Listen on this address (e.g. 127.0.0.1:0) instead of stdio. The bound
    /// address is printed on stdout; one connection is served.
    #[arg(long)]
    tcp: Option<String>,
    /// Answer detect requests with a wrong id.
    #[arg(long)]
    corrupt_ids: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = StubOptions {
        corrupt_ids: args.corrupt_ids,
    };
    let result = match &args.tcp {
        None => serve_stub(io::stdin().lock(), io::stdout().lock(), opts),
        Some(addr) => serve_tcp(addr, opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oracle-stub: {e}");
            ExitCode::FAILURE
        }
    }
}

fn serve_tcp(addr: &str, opts: StubOptions) -> io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    println!("{}", listener.local_addr()?);
    let (stream, _) = listener.accept()?;
    serve_stub(BufReader::new(stream.try_clone()?), stream, opts)
}
