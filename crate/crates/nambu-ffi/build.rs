fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR is set by cargo");
    let header = std::path::Path::new(&crate_dir).join("include").join("nambu.h");

    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    // Watching the output too means a deleted header is regenerated on the
    // next build; cbindgen leaves the file untouched when nothing changed.
    println!("cargo:rerun-if-changed=include/nambu.h");

    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(header);
        }
        Err(err) => panic!("failed to generate the C header: {err}"),
    }
}
