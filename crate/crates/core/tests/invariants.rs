mod common;

use common::props;

macro_rules! property {
    ($name:ident) => {
        #[test]
        fn $name() {
            if let Err(e) = props::$name() {
                panic!("{e}");
            }
        }
    };
}

property!(determinism);
property!(max_not_below_uncorrected);
property!(holm_not_above_bonferroni);
property!(cliff_bounded_and_antisymmetric);
property!(spearman_is_pearson_of_ranks);
property!(anova_f_is_t_squared);
property!(affine_invariance);
property!(bootstrap_scaling);
