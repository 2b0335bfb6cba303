use std::env;
use std::path::Path;

// The netlib backend links `-lcblas`, which Debian does not ship as a separate
// library. OpenBLAS exports the full cblas interface, so expose it under that
// name when no libcblas is present.
fn main() {
    let out_dir = env::var("OUT_DIR").unwrap();
    let have_cblas = ["/usr/lib/x86_64-linux-gnu/libcblas.so", "/usr/lib/libcblas.so"]
        .iter()
        .any(|p| Path::new(p).exists());
    if !have_cblas {
        for candidate in [
            "/usr/lib/x86_64-linux-gnu/libopenblas.so",
            "/etc/alternatives/libopenblas.so-x86_64-linux-gnu",
        ] {
            if Path::new(candidate).exists() {
                let link = Path::new(&out_dir).join("libcblas.so");
                let _ = std::fs::remove_file(&link);
                std::os::unix::fs::symlink(candidate, &link).unwrap();
                println!("cargo:rustc-link-search=native={out_dir}");
                break;
            }
        }
    }
}
