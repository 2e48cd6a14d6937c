#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "urban3d/forest.hpp"
#include "urban3d/linear.hpp"
#include "urban3d/sem.hpp"

namespace urban3d::models {

// Line-oriented text container:
//
//   urban3d-model 1
//   kind <linear|forest|sem>
//   config <free text echo>
//   <kind-specific records>
//   end
//
// Every number is written in shortest round-trip form, so a loaded model
// predicts bit-identically to the one that was saved.

using AnyModel = std::variant<LinearModel, RandomForest, SemParams>;

void save_model(std::ostream& os, const LinearModel& m, const std::string& config = "");
void save_model(std::ostream& os, const RandomForest& m, const std::string& config = "");
void save_model(std::ostream& os, const SemParams& m, const std::string& config = "");

/// Throws InputError with the line number on malformed input.
AnyModel load_model(std::istream& is, const std::string& source, std::string* config = nullptr);

}  // namespace urban3d::models
