//! Test functions, the linear-part functional and the lower-bound certificate.

pub mod certificate;
pub mod constants;
pub mod extremal;
pub mod fourier;
pub mod halasz;

pub use certificate::{certificate, BoundCertificate, CertificateOptions, CertificateReport, ErrorFactor};
pub use constants::{asymptotic_dn_table, constants_table, AsymptoticTable, ConstantsTable};
pub use extremal::{extremal_search, ExtremalOptions, ExtremalPoint, Goal};
pub use fourier::{lin_limit, lin_n, lin_series_crosscheck, Atom, FourierAtomFunction, Independence, SupNorm};
pub use halasz::{halasz_g_values, GammaReading, HalaszProduct, HalaszStats};
