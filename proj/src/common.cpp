#include "hybrist/common.hpp"

namespace hybrist {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::HMM: return "HMM";
    case ModelKind::UMM: return "UMM";
    case ModelKind::HWM: return "HWM";
  }
  return "?";
}

std::string_view to_string(VehicleClass c) noexcept {
  return c == VehicleClass::Metrobus ? "Metrobus" : "Car";
}

std::string_view to_string(ClassSet set) noexcept {
  switch (set) {
    case ClassSet::Metrobus: return "Metrobus";
    case ClassSet::Car: return "Car";
    case ClassSet::Both: return "Both";
  }
  return "None";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "HMM") return ModelKind::HMM;
  if (text == "UMM") return ModelKind::UMM;
  if (text == "HWM") return ModelKind::HWM;
  throw ParseError(0, "unknown model kind '" + std::string(text) + "'");
}

ClassSet parse_class_set(std::string_view text) {
  if (text == "Metrobus") return ClassSet::Metrobus;
  if (text == "Car") return ClassSet::Car;
  if (text == "Both") return ClassSet::Both;
  throw ParseError(0, "unknown vehicle class '" + std::string(text) + "'");
}

}  // namespace hybrist
