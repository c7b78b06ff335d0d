//! Compiles the family vehicle's release document and prints it.
//!
//!     cargo run --example compile_release -- 5 text
//!     cargo run --example compile_release -- 3 json

use release_gate::compiler::{compile, render, Format};
use release_gate::fixture::{self, FAMILY};
use release_gate::model::{rid, StageNumber};
use release_gate::workflow::replay;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let stage = StageNumber::new(args.next().map(|s| s.parse()).transpose()?.unwrap_or(5))?;
    let format: Format = args.next().as_deref().unwrap_or("text").parse()?;

    let repo = fixture::unicaragil();
    let state = replay(&repo.journal, &repo)?;
    let doc = compile(&repo, &state, &rid(FAMILY), stage)?;
    print!("{}", render(&doc, format));
    eprintln!("{} -> {}", doc.file_name(format), doc.content_digest);
    Ok(())
}
