#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "delab/geometry.hpp"
#include "delab/measures.hpp"

namespace delab::cat {

inline const char* kCatalogVersion = "1";

// Built-in domains addressable by id: halfplane, axis3d, ball-minus-diameter,
// cantor2d, sawtooth, point-cloud.
geo::DomainPtr make_domain(const std::string& id,
                           const nlohmann::json& params = {});

// Default pairing of boundary measures with domains; explicit ids:
// lebesgue, cantor, riesz, hausdorff-mixed, mixed-sawtooth, counting.
meas::MeasurePtr make_measure(const std::string& id, geo::DomainPtr dom,
                              const nlohmann::json& params = {});

// Weight kinds: unit, power-distance, a2-product, boundary-mass.
meas::WeightPtr make_weight(const std::string& kind, double gamma, double beta,
                            geo::DomainPtr dom, meas::MeasurePtr mu,
                            bool strict);

std::string default_measure(const std::string& domain_id);
double default_gamma(const std::string& domain_id);
std::vector<std::string> domain_ids();

}  // namespace delab::cat
