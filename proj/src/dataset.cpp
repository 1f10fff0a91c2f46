#include "drci/dataset.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace drci {

Dataset::Dataset(std::vector<Unit> units) : units_(std::move(units)) {
  if (units_.empty()) throw std::invalid_argument("dataset: no units");
  dim_ = units_.front().x.size();
  has_baseline_ = units_.front().y_b.has_value();
  has_instrument_ = units_.front().z.has_value();
  for (std::size_t i = 0; i < units_.size(); ++i) {
    const Unit& u = units_[i];
    const std::string where = " (unit " + std::to_string(i) + ")";
    if (!std::isfinite(u.y)) throw std::invalid_argument("dataset: non-finite outcome" + where);
    if (u.t != 0 && u.t != 1) throw std::invalid_argument("dataset: treatment must be 0 or 1" + where);
    if (u.x.size() != dim_)
      throw std::invalid_argument("dataset: inconsistent covariate dimension" + where);
    if (u.y_b.has_value() != has_baseline_)
      throw std::invalid_argument("dataset: baseline present on some units only" + where);
    if (u.y_b && !std::isfinite(*u.y_b))
      throw std::invalid_argument("dataset: non-finite baseline" + where);
    if (u.z.has_value() != has_instrument_)
      throw std::invalid_argument("dataset: instrument present on some units only" + where);
    if (u.z && *u.z != 0 && *u.z != 1)
      throw std::invalid_argument("dataset: instrument must be 0 or 1" + where);
    for (double v : u.x)
      if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite covariate" + where);
    (u.t == 1 ? treated_ : control_).push_back(i);
  }
  if (treated_.empty()) throw std::invalid_argument("dataset: no treated units");
  if (control_.empty()) throw std::invalid_argument("dataset: no control units");
}

std::vector<double> Dataset::outcomes(int arm) const {
  const auto& idx = arm == 1 ? treated_ : control_;
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(units_[i].y);
  return out;
}

std::vector<double> Dataset::baselines(int arm) const {
  if (!has_baseline_) throw std::invalid_argument("dataset: no baseline outcomes");
  const auto& idx = arm == 1 ? treated_ : control_;
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(*units_[i].y_b);
  return out;
}

std::vector<double> Dataset::all_outcomes() const {
  std::vector<double> out;
  out.reserve(units_.size());
  for (const auto& u : units_) out.push_back(u.y);
  return out;
}

double Dataset::mean_outcome(int arm) const {
  const auto& idx = arm == 1 ? treated_ : control_;
  double s = 0.0;
  for (std::size_t i : idx) s += units_[i].y;
  return s / static_cast<double>(idx.size());
}

std::vector<std::size_t> Dataset::stratum(int t, int z) const {
  if (!has_instrument_) throw std::invalid_argument("dataset: no instrument");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < units_.size(); ++i)
    if (units_[i].t == t && *units_[i].z == z) out.push_back(i);
  return out;
}

Dataset Dataset::swapped_treatment() const {
  std::vector<Unit> flipped = units_;
  for (auto& u : flipped) u.t = 1 - u.t;
  return Dataset(std::move(flipped));
}

}  // namespace drci
