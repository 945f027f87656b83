pub mod gf2e;
pub mod permgrp;
pub mod protograph;
pub mod registry;
pub mod sparse;
pub mod zmod;
pub mod extend;
pub mod binimage;
pub mod channel;
pub mod decoder;
pub mod sim;
pub mod format;
