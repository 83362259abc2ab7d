//! Every runnable example, executed as a test.

trait Finished {
    fn check(self);
}

impl Finished for () {
    fn check(self) {}
}

impl<E: std::fmt::Debug> Finished for Result<(), E> {
    fn check(self) {
        self.expect("example failed");
    }
}

macro_rules! example {
    ($name:ident) => {
        mod $name {
            #![allow(dead_code)]
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                use super::Finished;
                main().check();
            }
        }
    };
}

example!(adaptive_sampling);
example!(build_simulation);
example!(configspace_basics);
example!(dataset_io);
example!(evaluation_sweep);
example!(importance_analysis);
example!(surrogate_scoring);
example!(synthetic_benchmark);
