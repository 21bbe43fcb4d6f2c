#include "obliv/audit.hpp"

#include <algorithm>
#include <atomic>

namespace obliv {

namespace {
std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};
}  // namespace

void VectorAudit::reset() {
  g_peak.store(g_live.load());
}

VectorAuditStats VectorAudit::stats() { return {g_live.load(), g_peak.load()}; }

void VectorAudit::acquire() {
  const std::size_t now = g_live.fetch_add(1) + 1;
  std::size_t prev = g_peak.load();
  while (now > prev && !g_peak.compare_exchange_weak(prev, now)) {
  }
}

void VectorAudit::release() { g_live.fetch_sub(1); }

}  // namespace obliv
