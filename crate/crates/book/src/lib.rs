//! Compiles and runs the code listings of the guide in `book/src` as
//! doctests, one module per chapter.

#[cfg(doctest)]
mod chapters {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}

    #[doc = include_str!("../../../book/src/network-model.md")]
    mod network_model {}

    #[doc = include_str!("../../../book/src/special-functions.md")]
    mod special_functions {}

    #[doc = include_str!("../../../book/src/rates.md")]
    mod rates {}

    #[doc = include_str!("../../../book/src/efficiency.md")]
    mod efficiency {}

    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}

    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
