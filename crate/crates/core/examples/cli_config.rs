//! Drives the batch CLI from a configuration built in code.

use cocycle_lab::config::RunConfig;

fn main() -> cocycle_lab::Result<()> {
    let mut cfg = RunConfig { seed: 7, ..Default::default() };
    cfg.lyapunov.n = 2000;
    cfg.lyapunov.e_points = 13;
    cfg.lyapunov.realizations = 8;
    let dir = std::env::temp_dir().join("cocycle-lab-cli-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg.to_toml()?)?;
    let code = cocycle_lab::cli::run([
        "cocycle-lab",
        "lyapunov",
        "--config",
        path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    println!("exit code {code}");
    print!("{}", std::fs::read_to_string(dir.join("lyapunov.csv"))?);
    Ok(())
}
