#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>

#include "obliv/perturb.hpp"

namespace obliv {
namespace {

constexpr const char* kFormat = "obliv-perturbation";
constexpr int kVersion = 1;

// Fixed-width lowercase hex; each word takes ceil(bits / 4) digits.
std::string pack_words(std::span<const std::uint64_t> words, unsigned bits) {
  const unsigned digits = (bits + 3) / 4;
  std::string out;
  out.reserve(words.size() * digits);
  static constexpr char hex[] = "0123456789abcdef";
  for (auto w : words)
    for (unsigned d = digits; d-- > 0;) out.push_back(hex[(w >> (4 * d)) & 0xF]);
  return out;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::vector<std::uint64_t> unpack_words(const std::string& s, std::size_t count, unsigned bits,
                                        const char* field) {
  const unsigned digits = (bits + 3) / 4;
  if (s.size() != count * digits)
    throw std::invalid_argument(std::string("perturbation container: field '") + field + "' has wrong length");
  std::vector<std::uint64_t> out(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t w = 0;
    for (unsigned d = 0; d < digits; ++d) {
      const int v = hex_value(s[i * digits + d]);
      if (v < 0) throw std::invalid_argument(std::string("perturbation container: bad hex in '") + field + "'");
      w = (w << 4) | static_cast<std::uint64_t>(v);
    }
    if (bits < 64 && (w >> bits) != 0)
      throw std::invalid_argument(std::string("perturbation container: value too wide in '") + field + "'");
    out[i] = w;
  }
  return out;
}

// Sign vector as a bit string, '1' for -1, packed 4 per hex digit (first sign in the high bit).
std::string pack_signs(std::span<const std::int8_t> signs) {
  std::vector<std::uint64_t> nibbles((signs.size() + 3) / 4, 0);
  for (std::size_t i = 0; i < signs.size(); ++i)
    if (signs[i] < 0) nibbles[i / 4] |= 1ULL << (3 - i % 4);
  return pack_words(nibbles, 4);
}

std::vector<std::int8_t> unpack_signs(const std::string& s, std::size_t count, const char* field) {
  const auto nibbles = unpack_words(s, (count + 3) / 4, 4, field);
  std::vector<std::int8_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = (nibbles[i / 4] >> (3 - i % 4)) & 1 ? -1 : 1;
  for (std::size_t i = count; i < nibbles.size() * 4; ++i)
    if ((nibbles[i / 4] >> (3 - i % 4)) & 1)
      throw std::invalid_argument(std::string("perturbation container: padding bits set in '") + field + "'");
  return out;
}

}  // namespace

nlohmann::json perturbation_to_json(const ObliviousPerturbation& r) {
  const auto& v = r.r1().pattern();
  const auto& cfg = r.config();
  std::vector<std::int8_t> heavy(r.n());
  for (std::size_t i = 0; i < r.n(); ++i) heavy[i] = r.r2().heavy_mask()[i] ? -1 : 1;
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["n"] = r.n();
  j["eps"] = r.eps();
  j["delta"] = r.delta();
  j["config"] = {{"alpha", cfg.pattern.alpha}, {"beta", cfg.pattern.beta}, {"gamma", cfg.pattern.gamma},
                 {"rho", cfg.pattern.rho},     {"K", cfg.K},               {"L", cfg.L},
                 {"k_from_rule", cfg.k_from_rule}, {"rule_S", cfg.rule_S}};
  j["bits"] = r.bits().to_json();
  j["pattern"] = {{"fam1_k", v.fam1_k()},
                  {"fam1_degree", v.fam1_degree()},
                  {"fam23_degree", v.fam23_degree()},
                  {"fam1", pack_words(v.fam1_coefficients(), v.fam1_degree())},
                  {"fam2", pack_words(v.fam2_coefficients(), v.fam23_degree())},
                  {"fam3", pack_words(v.fam3_coefficients(), v.fam23_degree())}};
  j["d1"] = pack_signs(r.r1().d1());
  j["d2"] = pack_signs(r.r1().d2());
  const auto rows = r.r2().rows();
  j["r2"] = {{"rows", std::vector<std::uint32_t>(rows.begin(), rows.end())},
             {"signs", pack_signs(r.r2().signs())},
             {"trimmed", pack_signs(heavy)}};
  return j;
}

ObliviousPerturbation perturbation_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat)
      throw std::invalid_argument("perturbation container: unknown format tag");
    if (j.at("version").get<int>() != kVersion)
      throw std::invalid_argument("perturbation container: unsupported version " +
                                  std::to_string(j.at("version").get<int>()));
    const auto n = j.at("n").get<std::size_t>();
    if (n < 2) throw std::invalid_argument("perturbation container: n must be at least 2");
    PerturbationConfig cfg;
    const auto& c = j.at("config");
    cfg.pattern.alpha = c.at("alpha").get<double>();
    cfg.pattern.beta = c.at("beta").get<double>();
    cfg.pattern.gamma = c.at("gamma").get<double>();
    cfg.pattern.rho = c.at("rho").get<double>();
    cfg.K = c.at("K").get<std::uint32_t>();
    cfg.L = c.at("L").get<std::uint32_t>();
    cfg.k_from_rule = c.at("k_from_rule").get<bool>();
    cfg.rule_S = c.at("rule_S").get<double>();

    const auto& p = j.at("pattern");
    const auto k1 = p.at("fam1_k").get<std::size_t>();
    const auto m1 = p.at("fam1_degree").get<unsigned>();
    const auto m2 = p.at("fam23_degree").get<unsigned>();
    if (m1 < 1 || m1 > 64 || m2 < 1 || m2 > 64 || k1 > 128)
      throw std::invalid_argument("perturbation container: bad pattern degrees");
    auto f1 = unpack_words(p.at("fam1").get<std::string>(), k1, m1, "pattern.fam1");
    auto f2 = unpack_words(p.at("fam2").get<std::string>(), 4 * n, m2, "pattern.fam2");
    auto f3 = unpack_words(p.at("fam3").get<std::string>(), 4 * n, m2, "pattern.fam3");
    auto v = std::make_shared<const PatternMatrix>(
        PatternMatrix::from_coefficients(n, std::move(f1), std::move(f2), std::move(f3)));
    if (v->fam1_degree() != m1 || v->fam23_degree() != m2 || v->fam1_k() != k1)
      throw std::invalid_argument("perturbation container: pattern degrees do not match n");

    auto d1 = unpack_signs(j.at("d1").get<std::string>(), n, "d1");
    auto d2 = unpack_signs(j.at("d2").get<std::string>(), n, "d2");
    DensePerturbation r1(v, std::move(d1), std::move(d2), cfg.pattern.rho);

    const auto& r2j = j.at("r2");
    auto rows = r2j.at("rows").get<std::vector<std::uint32_t>>();
    if (rows.size() != n * cfg.K) throw std::invalid_argument("perturbation container: r2.rows has wrong length");
    auto signs = unpack_signs(r2j.at("signs").get<std::string>(), n * cfg.K, "r2.signs");
    auto r2 = SparsePerturbation::from_parts(n, cfg.K, cfg.L, std::move(rows), std::move(signs));
    const auto trimmed = unpack_signs(r2j.at("trimmed").get<std::string>(), n, "r2.trimmed");
    for (std::size_t i = 0; i < n; ++i)
      if ((trimmed[i] < 0) != r2.heavy_mask()[i])
        throw std::invalid_argument("perturbation container: stored trimming mask disagrees with the rows");

    BitReport bits;
    const auto& b = j.at("bits");
    bits.pattern_fam1 = b.at("pattern_v1").get<std::uint64_t>();
    bits.pattern_fam2 = b.at("pattern_v2").get<std::uint64_t>();
    bits.pattern_fam3 = b.at("pattern_v3").get<std::uint64_t>();
    bits.d1 = b.at("d1").get<std::uint64_t>();
    bits.d2 = b.at("d2").get<std::uint64_t>();
    bits.r2_subsets = b.at("r2_subsets").get<std::uint64_t>();
    bits.r2_signs = b.at("r2_signs").get<std::uint64_t>();
    return ObliviousPerturbation(std::move(r1), std::move(r2), cfg, j.at("eps").get<double>(),
                                 j.at("delta").get<double>(), bits);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("perturbation container: ") + e.what());
  }
}

void save_perturbation(const ObliviousPerturbation& r, const std::string& path) {
  namespace fs = std::filesystem;
  const std::string text = perturbation_to_json(r).dump();
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << text << '\n';
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw std::runtime_error("cannot rename '" + tmp.string() + "' to '" + path + "': " + ec.message());
  }
}

ObliviousPerturbation load_perturbation(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("'" + path + "': " + e.what());
  }
  try {
    return perturbation_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("'" + path + "': " + e.what());
  }
}

}  // namespace obliv
