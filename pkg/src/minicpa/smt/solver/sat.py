"""A small CDCL SAT solver (watched literals, VSIDS, 1UIP, Luby restarts).

Literals are ints: variable v (0-based) appears as 2*v (positive) and 2*v+1
(negative); ``lit ^ 1`` negates.  Clauses are plain lists whose first two
entries are the watched literals.
"""

from __future__ import annotations

import time

UNDEF, TRUE, FALSE = 0, 1, 2


def _luby(x: int) -> int:
    """Luby restart sequence (0-indexed): 1 1 2 1 1 2 4 1 1 2 ..."""
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x = x % size
    return 1 << seq


class SatSolver:
    def __init__(self):
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.watches: list[list[list[int]]] = []
        self.litval = bytearray()
        self.level: list[int] = []
        self.reason: list = []
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.activity: list[float] = []
        self.var_inc = 1.0
        self.phase = bytearray()
        self.ok = True
        self.conflicts = 0
        # order heap
        self.heap: list[int] = []
        self.heap_pos: list[int] = []

    # -- variables ---------------------------------------------------------

    def new_var(self) -> int:
        v = self.nvars
        self.nvars += 1
        self.watches.append([])
        self.watches.append([])
        self.litval.extend(b"\x00\x00")
        self.level.append(0)
        self.reason.append(None)
        self.activity.append(0.0)
        self.phase.append(0)
        self.heap_pos.append(-1)
        self._heap_insert(v)
        return v

    # -- order heap (max-heap on activity) ----------------------------------

    def _heap_insert(self, v: int):
        if self.heap_pos[v] >= 0:
            return
        self.heap.append(v)
        self.heap_pos[v] = len(self.heap) - 1
        self._heap_up(len(self.heap) - 1)

    def _heap_up(self, i: int):
        heap, pos, act = self.heap, self.heap_pos, self.activity
        v = heap[i]
        a = act[v]
        while i > 0:
            p = (i - 1) >> 1
            if act[heap[p]] >= a:
                break
            heap[i] = heap[p]
            pos[heap[i]] = i
            i = p
        heap[i] = v
        pos[v] = i

    def _heap_down(self, i: int):
        heap, pos, act = self.heap, self.heap_pos, self.activity
        n = len(heap)
        v = heap[i]
        a = act[v]
        while True:
            l = 2 * i + 1
            if l >= n:
                break
            r = l + 1
            c = r if r < n and act[heap[r]] > act[heap[l]] else l
            if act[heap[c]] <= a:
                break
            heap[i] = heap[c]
            pos[heap[i]] = i
            i = c
        heap[i] = v
        pos[v] = i

    def _heap_pop(self) -> int:
        heap, pos = self.heap, self.heap_pos
        v = heap[0]
        last = heap.pop()
        pos[v] = -1
        if heap:
            heap[0] = last
            pos[last] = 0
            self._heap_down(0)
        return v

    def _bump(self, v: int):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            inv = 1e-100
            for i in range(self.nvars):
                self.activity[i] *= inv
            self.var_inc *= inv
        if self.heap_pos[v] >= 0:
            self._heap_up(self.heap_pos[v])

    # -- clauses -----------------------------------------------------------

    def add_clause(self, lits) -> bool:
        """Add a problem clause; returns False if the instance is now unsat."""
        if not self.ok:
            return False
        seen = set()
        out = []
        for lit in lits:
            if lit ^ 1 in seen:
                return True  # tautology
            if lit in seen:
                continue
            val = self.litval[lit]
            if val == TRUE and self.level[lit >> 1] == 0:
                return True  # already satisfied at top level
            if val == FALSE and self.level[lit >> 1] == 0:
                continue  # drop falsified-at-top literal
            seen.add(lit)
            out.append(lit)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            if not self._enqueue(out[0], None):
                self.ok = False
                return False
            self.ok = self.propagate() is None
            return self.ok
        self.clauses.append(out)
        self.watches[out[0]].append(out)
        self.watches[out[1]].append(out)
        return True

    # -- assignment --------------------------------------------------------

    def _enqueue(self, lit: int, reason) -> bool:
        val = self.litval[lit]
        if val != UNDEF:
            return val == TRUE
        v = lit >> 1
        self.litval[lit] = TRUE
        self.litval[lit ^ 1] = FALSE
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.phase[v] = 1 - (lit & 1)
        self.trail.append(lit)
        return True

    def propagate(self):
        """Unit propagation; returns a conflicting clause or None."""
        litval = self.litval
        watches = self.watches
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            false_lit = p ^ 1
            ws = watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0] = c[1]
                    c[1] = false_lit
                first = c[0]
                if litval[first] == TRUE:
                    ws[j] = c
                    j += 1
                    continue
                found = False
                for k in range(2, len(c)):
                    lk = c[k]
                    if litval[lk] != FALSE:
                        c[1] = lk
                        c[k] = false_lit
                        watches[lk].append(c)
                        found = True
                        break
                if found:
                    continue
                ws[j] = c
                j += 1
                if litval[first] == FALSE:
                    # conflict: keep remaining watches, restore list
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(self.trail)
                    return c
                self.litval[first] = TRUE
                self.litval[first ^ 1] = FALSE
                v = first >> 1
                self.level[v] = len(self.trail_lim)
                self.reason[v] = c
                self.phase[v] = 1 - (first & 1)
                self.trail.append(first)
            del ws[j:]
        return None

    # -- conflict analysis ---------------------------------------------------

    def _analyze(self, confl) -> tuple[list[int], int]:
        learnt = [0]
        seen = bytearray(self.nvars)
        counter = 0
        p = -1
        idx = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        c = confl
        skip_head = False  # reason clauses carry their propagated literal at [0]
        while True:
            for q in (c[1:] if skip_head else c):
                v = q >> 1
                if not seen[v] and self.level[v] > 0:
                    seen[v] = 1
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[self.trail[idx] >> 1]:
                idx -= 1
            p = self.trail[idx] ^ 1
            v = p >> 1
            idx -= 1
            seen[v] = 0
            counter -= 1
            if counter == 0:
                break
            c = self.reason[v]
            skip_head = True
        learnt[0] = p
        # clause minimization: drop literals implied by the rest
        marked = set(q >> 1 for q in learnt)
        kept = [learnt[0]]
        for q in learnt[1:]:
            r = self.reason[q >> 1]
            if r is not None and all((x >> 1) in marked or self.level[x >> 1] == 0
                                     for x in r if x != (q ^ 1)):
                continue
            kept.append(q)
        learnt = kept
        if len(learnt) == 1:
            return learnt, 0
        # find backjump level = max level among learnt[1:], move that lit to slot 1
        max_i = 1
        for i in range(2, len(learnt)):
            if self.level[learnt[i] >> 1] > self.level[learnt[max_i] >> 1]:
                max_i = i
        learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
        return learnt, self.level[learnt[1] >> 1]

    def _backtrack(self, target_level: int):
        litval, trail = self.litval, self.trail
        while len(self.trail_lim) > target_level:
            lim = self.trail_lim.pop()
            for i in range(len(trail) - 1, lim - 1, -1):
                lit = trail[i]
                v = lit >> 1
                litval[lit] = UNDEF
                litval[lit ^ 1] = UNDEF
                self.reason[v] = None
                if self.heap_pos[v] < 0:
                    self._heap_insert(v)
            del trail[lim:]
        self.qhead = len(self.trail)

    # -- main loop -----------------------------------------------------------

    def solve(self, conflict_limit: int = 2_000_000, deadline: float | None = None) -> str:
        if not self.ok:
            return "unsat"
        if self.propagate() is not None:
            self.ok = False
            return "unsat"
        restart_n = 0
        budget = _luby(restart_n) * 128
        since_restart = 0
        check_tick = 0
        while True:
            confl = self.propagate()
            if confl is not None:
                self.conflicts += 1
                since_restart += 1
                if not self.trail_lim:
                    self.ok = False
                    return "unsat"
                learnt, back_level = self._analyze(confl)
                self._backtrack(back_level)
                if len(learnt) > 1:
                    self.clauses.append(learnt)
                    self.watches[learnt[0]].append(learnt)
                    self.watches[learnt[1]].append(learnt)
                    self._enqueue(learnt[0], learnt)
                else:
                    self._enqueue(learnt[0], None)
                self.var_inc /= 0.95
                if self.conflicts >= conflict_limit:
                    return "unknown"
                check_tick += 1
                if deadline is not None and (check_tick & 255) == 0 and time.monotonic() > deadline:
                    return "unknown"
            else:
                if since_restart >= budget:
                    since_restart = 0
                    restart_n += 1
                    budget = _luby(restart_n) * 128
                    self._backtrack(0)
                # pick branching variable
                v = -1
                while self.heap:
                    cand = self._heap_pop()
                    if self.litval[2 * cand] == UNDEF:
                        v = cand
                        break
                if v < 0:
                    return "sat"
                self.trail_lim.append(len(self.trail))
                lit = 2 * v + (0 if self.phase[v] else 1)
                self._enqueue(lit, None)

    def model_value(self, v: int) -> bool:
        return self.litval[2 * v] == TRUE
