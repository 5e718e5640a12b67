// Copyright 2026 The disco Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "disco/error.hpp"

namespace disco {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::DegenerateGeometry: return "DegenerateGeometry";
    case Errc::BehindCamera: return "BehindCamera";
    case Errc::ZeroProjection: return "ZeroProjection";
    case Errc::InvalidCrop: return "InvalidCrop";
    case Errc::SamplingExhausted: return "SamplingExhausted";
    case Errc::FormatError: return "FormatError";
    case Errc::ShapeError: return "ShapeError";
    case Errc::InsufficientBatch: return "InsufficientBatch";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::ConfigError: return "ConfigError";
    case Errc::EmptyEvaluation: return "EmptyEvaluation";
    case Errc::UnderConstrained: return "UnderConstrained";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace disco
