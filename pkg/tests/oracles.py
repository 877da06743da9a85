"""Brute-force re-implementation of the candidate exemption and ranking
rules, used as the independent oracle.  Deliberately written as plain loops
against the recorded arrays; shares no helper with spssim.sps."""

import math

from spssim.sps import slrrc_range


def oracle_exempt_and_rank(candidates, field, ue, cfg, now):
    window = 10 * cfg.p_step_ms

    def monitored(s):
        if s >= field.next_subframe:
            return True
        if s < now - window:
            return True
        return bool(field.monitored[ue, s % window])

    unmon = [s for s in range(now - window, now) if not monitored(s)]

    def c1_hit(c):
        for z in unmon:
            d = c.subframe - z
            if d <= 0:
                continue
            for p in cfg.allowed_p_rsvp:
                lo, hi = slrrc_range(p)
                if d % p == 0 and d <= p * (10 * hi - 1):
                    return True
        return False

    decoded = []
    for s in range(max(0, now - window), now):
        for e in field.sci_slots[s % window]:
            if e.subframe == s and e.decoded[ue] and math.isfinite(e.rsrp_dbm[ue]):
                decoded.append(e)

    def max_rsrp(c):
        best = -math.inf
        for e in decoded:
            d = c.subframe - e.subframe
            lo, hi = slrrc_range(e.p_rsvp_ms)
            if d <= 0 or d % e.p_rsvp_ms or d > e.p_rsvp_ms * (10 * hi - 1):
                continue
            if (c.start_subch < e.start_subch + e.l_subch
                    and e.start_subch < c.start_subch + c.l_subch):
                best = max(best, float(e.rsrp_dbm[ue]))
        return best

    c1 = [c1_hit(c) for c in candidates]
    rsrp = [max_rsrp(c) for c in candidates]
    need = math.ceil(len(candidates) / 5)
    non_c1 = sum(1 for h in c1 if not h)
    k = 0
    while True:
        thr = cfg.th_sps_dbm + 3.0 * k
        alive = [not h and r < thr for h, r in zip(c1, rsrp)]
        if sum(alive) >= need or sum(alive) == non_c1:
            break
        k += 1
    survivors = [c for c, a in zip(candidates, alive) if a]

    # recent-average substitute, recomputed directly
    mon_vals = []
    for s in range(now - window, now):
        if s < field.next_subframe and not monitored(s):
            continue
        idx = s % window
        mon_vals.extend(field.rssi_mw[ue, idx, :].tolist())
    substitute = (sum(mon_vals) / len(mon_vals)) if mon_vals else field.noise_subch_mw

    def energy(c):
        total = 0.0
        for i in range(1, 11):
            s = c.subframe - i * cfg.p_step_ms
            if s >= field.next_subframe or not monitored(s):
                total += substitute * c.l_subch
            else:
                row = field.rssi_mw[ue, s % window, :]
                total += float(row[c.start_subch:c.start_subch + c.l_subch].sum())
        return total / 10.0

    ranked = sorted(survivors,
                    key=lambda c: (energy(c), c.subframe, c.start_subch))
    n_sel = min(len(survivors), need)
    return survivors, thr, ranked[:n_sel], [energy(c) for c in candidates]


