use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "abcdose-service", version, about = "Trial conduct service")]
struct Args {
    #[arg(long, env = "ABC_PORT", default_value_t = 8080)]
    port: u16,
    /// Directory holding one log file per trial.
    #[arg(long, env = "ABC_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    /// Dashboard bundle served at `/`.
    #[arg(long, env = "ABC_STATIC_DIR", default_value = "dashboard/dist")]
    static_dir: PathBuf,
    #[arg(long, env = "ABC_BIND", default_value = "127.0.0.1")]
    bind: std::net::IpAddr,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let data_dir = args.data_dir.clone();
    let state = tokio::task::spawn_blocking(move || abcdose_service::AppState::open(data_dir))
        .await
        .expect("startup task")?;
    let app = abcdose_service::router(state, &args.static_dir);
    let addr = SocketAddr::new(args.bind, args.port);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{addr}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
