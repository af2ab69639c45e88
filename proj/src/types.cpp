#include "evdet/types.hpp"

namespace evdet {

const char* to_string(VehicleType t) {
    switch (t) {
        case VehicleType::police: return "police";
        case VehicleType::fire: return "fire";
        case VehicleType::ambulance: return "ambulance";
        case VehicleType::non_ev: return "non_ev";
    }
    return "non_ev";
}

VehicleType vehicle_type_from_string(const std::string& s) {
    if (s == "police") return VehicleType::police;
    if (s == "fire") return VehicleType::fire;
    if (s == "ambulance") return VehicleType::ambulance;
    if (s == "non_ev") return VehicleType::non_ev;
    throw DataError("unknown vehicle type: '" + s + "'");
}

const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw DataError("unknown split: '" + s + "'");
}

const char* to_string(InvalidReason r) {
    switch (r) {
        case InvalidReason::none: return "";
        case InvalidReason::behind_camera: return "behind_camera";
        case InvalidReason::centroid_out_of_fov: return "centroid_out_of_fov";
        case InvalidReason::below_min_width: return "below_min_width";
    }
    return "";
}

InvalidReason invalid_reason_from_string(const std::string& s) {
    if (s.empty()) return InvalidReason::none;
    if (s == "behind_camera") return InvalidReason::behind_camera;
    if (s == "centroid_out_of_fov") return InvalidReason::centroid_out_of_fov;
    if (s == "below_min_width") return InvalidReason::below_min_width;
    throw DataError("unknown invalid reason: '" + s + "'");
}

}  // namespace evdet
