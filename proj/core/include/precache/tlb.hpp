#pragma once

#include <map>
#include <optional>

#include "precache/config.hpp"
#include "precache/types.hpp"

namespace precache {

/// Fully associative, LRU.
class Tlb {
 public:
  explicit Tlb(unsigned entries) : capacity_(entries) {}

  std::optional<Addr> lookup(Addr vpn) const;
  void touch(Addr vpn);
  void insert(Addr vpn, Addr pfn);

  std::size_t size() const { return map_.size(); }
  /// vpn -> pfn, sorted.
  std::map<Addr, Addr> contents() const;

 private:
  struct Entry {
    Addr pfn;
    std::uint64_t stamp;
  };
  unsigned capacity_;
  std::uint64_t clock_ = 0;
  std::map<Addr, Entry> map_;
};

class PreTlb {
 public:
  struct Entry {
    Addr pfn;
    Seq inserter_seq;
  };

  explicit PreTlb(unsigned capacity) : capacity_(capacity) {}

  const Entry* lookup(Addr vpn) const;
  void insert(Addr vpn, Addr pfn, Seq seq);
  std::optional<Entry> take(Addr vpn);
  void clear() { map_.clear(); }

  std::size_t size() const { return map_.size(); }
  unsigned capacity() const { return capacity_; }
  const std::map<Addr, Entry>& contents() const { return map_; }

 private:
  unsigned capacity_;
  std::map<Addr, Entry> map_;
};

/// Single-level page table: data pages are remapped by flipping a frame bit
/// so translation is observable; the mapping is a bijection below kCodeBase.
Addr page_frame(Addr vpn);

/// Per-core translation front end (TLB + pre-TLB).
class TranslationUnit {
 public:
  struct Result {
    Addr paddr;
    unsigned latency;
    bool walked;
  };

  TranslationUnit(const TlbConfig& cfg, Mode mode);

  bool enabled() const { return cfg_.paging; }
  Addr physical(Addr vaddr) const;

  /// Translation for an access that may still be squashed.
  Result translate(Addr vaddr, Seq seq);
  /// Translation for a committing access (stores): fills the TLB directly.
  Result translate_committed(Addr vaddr);
  void on_commit(Addr vaddr);
  void clear_pre() { pre_.clear(); }

  const Tlb& tlb() const { return tlb_; }
  const PreTlb& pre_tlb() const { return pre_; }
  std::uint64_t walks() const { return walks_; }

 private:
  Addr vpn_of(Addr vaddr) const { return vaddr / cfg_.page_size; }

  TlbConfig cfg_;
  Mode mode_;
  Tlb tlb_;
  PreTlb pre_;
  std::uint64_t walks_ = 0;
};

}  // namespace precache
