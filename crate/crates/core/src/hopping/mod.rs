//! Hop selection: the connection-state kernel (basic and adaptive) and the
//! 32-channel inquiry/page sequences.

mod inquiry;
mod kernel;

pub use inquiry::{
    inquiry_hop, inquiry_scan_hop, page_hop, page_scan_hop, page_train, wakeup_channels, InquiryTrain, GIAC_LAP,
};
pub use kernel::{
    adaptive_hop, basic_hop, predict_sequence, AddressParts, HopAddress, HopError, HopKernel, HopSelector,
    MAX_SEQUENCE_LEN,
};
