//! Writes the bundled instance files into a directory (default `instances`).

use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "instances".into()));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("cannot create {}: {e}", dir.display());
        std::process::exit(6);
    }
    for (name, inst) in oneshot_core::instance::fixtures() {
        let path = dir.join(format!("{name}.json"));
        if let Err(e) = std::fs::write(&path, inst.to_json()) {
            eprintln!("cannot write {}: {e}", path.display());
            std::process::exit(6);
        }
        println!("{}", path.display());
    }
}
