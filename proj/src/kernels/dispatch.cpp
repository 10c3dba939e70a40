#include <cstdlib>
#include <string_view>

#include "romo/kernels/kernels.hpp"

namespace romo::kernels {

#if !(defined(__x86_64__) && defined(ROMO_HAVE_AVX2))
const KernelTable* avx2_table() { return nullptr; }
#endif

#if !defined(__aarch64__)
const KernelTable* neon_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& resolve() {
  const auto variants = available();
  if (const char* forced = std::getenv("ROMO_KERNELS")) {
    for (const KernelTable* t : variants) {
      if (t->name == std::string_view(forced)) return *t;
    }
  }
  return *variants.back();
}

const KernelTable*& active_slot() {
  static const KernelTable* slot = &resolve();
  return slot;
}

}  // namespace

std::vector<const KernelTable*> available() {
  std::vector<const KernelTable*> out{&scalar_table()};
  if (const KernelTable* t = avx2_table(); t != nullptr && cpu_has_avx2_fma()) out.push_back(t);
  if (const KernelTable* t = neon_table(); t != nullptr) out.push_back(t);
  return out;
}

const KernelTable& active() { return *active_slot(); }

void set_active(const KernelTable& table) { active_slot() = &table; }

}  // namespace romo::kernels
