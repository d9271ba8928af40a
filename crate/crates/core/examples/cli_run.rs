//! Drives the command-line front end in-process and lists what `run` writes.

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("shearwave-cli-run");
    let args = [
        "shearwave".to_string(),
        "run".into(),
        "--config".into(),
        concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/breaking.cfg").into(),
        format!("--output.dir={}", dir.display()),
        "--plot".into(),
    ];
    print!("{}", shearwave::cli::run_cli(args.to_vec())?);
    let mut names: Vec<_> = std::fs::read_dir(&dir)?.filter_map(|e| e.ok()).map(|e| e.file_name()).collect();
    names.sort();
    println!("{} files, first {:?}, last {:?}", names.len(), names.first(), names.last());
    Ok(())
}
