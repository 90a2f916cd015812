macro_rules! example_test {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $module() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example_test!(estimate, "estimate.rs");
example_test!(moments, "moments.rs");
example_test!(asymptotic_ci, "asymptotic_ci.rs");
example_test!(bca_bootstrap, "bca_bootstrap.rs");
example_test!(coverage_study, "coverage_study.rs");
example_test!(sampling_distribution, "sampling_distribution.rs");
