fn main() {
    // LAPACK symbols (zheevd) come from the system OpenBLAS build.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
