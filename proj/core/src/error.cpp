#include "npr/error.hpp"

namespace npr {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::non_positive_depth: return "NonPositiveDepth";
    case Errc::pixel_out_of_bounds: return "PixelOutOfBounds";
    case Errc::behind_camera: return "BehindCamera";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::missing_features: return "MissingFeatures";
    case Errc::io_error: return "IoError";
    case Errc::bad_magic: return "BadMagic";
    case Errc::version_unsupported: return "VersionUnsupported";
    case Errc::corrupt_length: return "CorruptLength";
    case Errc::empty_cloud: return "EmptyCloud";
    case Errc::weights_not_loaded: return "WeightsNotLoaded";
    case Errc::dim_mismatch: return "DimMismatch";
    case Errc::zero_quaternion: return "ZeroQuaternion";
    case Errc::degenerate_quaternion: return "DegenerateQuaternion";
    case Errc::count_mismatch: return "CountMismatch";
    case Errc::wrong_view_count: return "WrongViewCount";
    case Errc::all_nodes_masked: return "AllNodesMasked";
    case Errc::zero_vector: return "ZeroVector";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::too_small: return "TooSmall";
    case Errc::bad_distribution: return "BadDistribution";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::bad_config: return "BadConfig";
  }
  return "UnknownError";
}

}  // namespace npr
