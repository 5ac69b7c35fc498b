//! Dataset ingestion: IDX files, seeded splits, canvases and label embedding.

mod embed;
mod idx;
mod split;

pub use embed::{
    draw_negative_class, embed_label, embed_marked, embed_neutral, pad_to_canvas, Canvas,
    EmbeddedSample, Polarity,
};
pub use idx::{parse_idx, to_idx_bytes, IdxData, Mnist, RawImage, IMAGE_MAGIC, LABEL_MAGIC, RAW_PIXELS, RAW_SIDE};
pub use split::{make_splits, SplitSpec, Splits};
