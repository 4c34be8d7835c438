#pragma once

#include <memory>
#include <string>

#include "quasimodo/ensemble.hpp"

namespace quasimodo {

// JSON container with shape metadata and full-precision matrices; the `kind`
// discriminator selects the backend on load.
void save_model(const std::string& path, const SurrogateEnsemble& ensemble);
std::unique_ptr<SurrogateEnsemble> load_model(const std::string& path);

}  // namespace quasimodo
