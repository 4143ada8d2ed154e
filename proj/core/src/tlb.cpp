#include "precache/tlb.hpp"

namespace precache {

std::optional<Addr> Tlb::lookup(Addr vpn) const {
  auto it = map_.find(vpn);
  if (it == map_.end()) return std::nullopt;
  return it->second.pfn;
}

void Tlb::touch(Addr vpn) {
  auto it = map_.find(vpn);
  if (it != map_.end()) it->second.stamp = ++clock_;
}

void Tlb::insert(Addr vpn, Addr pfn) {
  if (auto it = map_.find(vpn); it != map_.end()) {
    it->second = {pfn, ++clock_};
    return;
  }
  if (map_.size() >= capacity_) {
    auto victim = map_.begin();
    for (auto it = map_.begin(); it != map_.end(); ++it)
      if (it->second.stamp < victim->second.stamp) victim = it;
    map_.erase(victim);
  }
  map_.emplace(vpn, Entry{pfn, ++clock_});
}

std::map<Addr, Addr> Tlb::contents() const {
  std::map<Addr, Addr> out;
  for (const auto& [vpn, e] : map_) out.emplace(vpn, e.pfn);
  return out;
}

const PreTlb::Entry* PreTlb::lookup(Addr vpn) const {
  auto it = map_.find(vpn);
  return it == map_.end() ? nullptr : &it->second;
}

void PreTlb::insert(Addr vpn, Addr pfn, Seq seq) {
  if (map_.count(vpn)) return;
  if (map_.size() >= capacity_) throw SimulationError("pre-tlb capacity exceeded");
  map_.emplace(vpn, Entry{pfn, seq});
}

std::optional<PreTlb::Entry> PreTlb::take(Addr vpn) {
  auto it = map_.find(vpn);
  if (it == map_.end()) return std::nullopt;
  Entry e = it->second;
  map_.erase(it);
  return e;
}

Addr page_frame(Addr vpn) { return vpn ^ 0x40u; }

TranslationUnit::TranslationUnit(const TlbConfig& cfg, Mode mode)
    : cfg_(cfg), mode_(mode), tlb_(cfg.entries), pre_(cfg.pre_tlb_entries) {}

Addr TranslationUnit::physical(Addr vaddr) const {
  if (!cfg_.paging || vaddr >= kCodeBase) return vaddr;
  return page_frame(vpn_of(vaddr)) * cfg_.page_size + vaddr % cfg_.page_size;
}

TranslationUnit::Result TranslationUnit::translate(Addr vaddr, Seq seq) {
  if (!cfg_.paging || vaddr >= kCodeBase) return {vaddr, 0, false};
  Addr vpn = vpn_of(vaddr);
  Addr paddr = physical(vaddr);
  if (tlb_.lookup(vpn)) {
    if (mode_ == Mode::Baseline) tlb_.touch(vpn);
    return {paddr, 0, false};
  }
  if (mode_ == Mode::PreCache && pre_.lookup(vpn)) return {paddr, 0, false};
  ++walks_;
  if (mode_ == Mode::Baseline)
    tlb_.insert(vpn, page_frame(vpn));
  else
    pre_.insert(vpn, page_frame(vpn), seq);
  return {paddr, cfg_.walk_latency, true};
}

TranslationUnit::Result TranslationUnit::translate_committed(Addr vaddr) {
  if (!cfg_.paging || vaddr >= kCodeBase) return {vaddr, 0, false};
  Addr vpn = vpn_of(vaddr);
  Addr paddr = physical(vaddr);
  if (tlb_.lookup(vpn)) {
    tlb_.touch(vpn);
    return {paddr, 0, false};
  }
  if (auto e = pre_.take(vpn)) {
    tlb_.insert(vpn, e->pfn);
    return {paddr, 0, false};
  }
  ++walks_;
  tlb_.insert(vpn, page_frame(vpn));
  return {paddr, cfg_.walk_latency, true};
}

void TranslationUnit::on_commit(Addr vaddr) {
  if (!cfg_.paging || mode_ == Mode::Baseline || vaddr >= kCodeBase) return;
  Addr vpn = vpn_of(vaddr);
  if (auto e = pre_.take(vpn))
    tlb_.insert(vpn, e->pfn);
  else
    tlb_.touch(vpn);
}

}  // namespace precache
