// Copyright 2026 The neurodict Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "neurodict/errors.hpp"
#include "neurodict/kernels/kernels.hpp"

namespace neurodict::kernels {

#if !NEURODICT_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2_fma() {
#if NEURODICT_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table_for(Isa isa) {
  if (isa == Isa::avx2) return *avx2_table();
  return scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> ptr{&table_for(default_isa())};
  return ptr;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  return std::nullopt;
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2: {
      static const bool ok = avx2_table() != nullptr && cpu_has_avx2_fma();
      return ok;
    }
  }
  return false;
}

Isa default_isa() {
  if (const char* env = std::getenv("NEURODICT_ISA")) {
    const auto requested = parse_isa(env);
    if (requested && isa_supported(*requested)) return *requested;
  }
  return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

Isa active_isa() { return active().isa; }

void select_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw UsageError("kernel ISA '" + std::string(isa_name(isa)) +
                     "' is not available on this machine");
  }
  current().store(&table_for(isa), std::memory_order_release);
}

ScopedIsa::ScopedIsa(Isa isa) : previous_(active_isa()) { select_isa(isa); }

ScopedIsa::~ScopedIsa() { select_isa(previous_); }

}  // namespace neurodict::kernels
