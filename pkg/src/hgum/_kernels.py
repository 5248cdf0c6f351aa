"""Schema-independent traversal kernels over the column form of a schema ROM.

These are the hot loops of the package: one small FSM plus a bounded
context stack, driven entirely by the ROM arrays.  All state lives in numpy
arrays owned by the caller, so a kernel can stop whenever input (DES) or
output space runs out and resume on the next call.
"""
import numpy as np

from ._jit import njit

# node kinds (match schema.NodeKind)
K_BYTES = 0
K_ARRAY = 1
K_LIST = 2
K_END = 3

# token kinds
T_DATA = 0
T_ALEN = 1
T_LBEGIN = 2
T_AEND = 3
T_LEND = 4

# traversal phases
P_VISIT = 0
P_ADVANCE = 1
P_DONE = 2
P_ERROR = 3

# kernel return status
R_OK = 0
R_OUT_FULL = 1
R_ERROR = 2

# error codes
E_NONE = 0
E_DEPTH = 1
E_FRAME = 2
E_TRAILING = 3
E_HEADER = 4
E_LEVEL = 5
E_COUNT = 6
E_MISMATCH = 7
E_LIST_LEVEL = 8
E_TRUNCATED = 9

# state slots shared by DES and SER
S_VISIT = 0
S_PHASE = 1
S_DEPTH = 2
S_LDEPTH = 3
S_ABS = 4
S_MODE = 5
S_ERR = 6
S_ERRPOS = 7
C_DATA_CYC = 8
C_DATA_TOK = 9
C_CTRL = 10
C_PUSH = 11
C_POP = 12
C_HDR = 13
# DES only
S_FREM = 14
S_FPAD = 15
S_PAD = 16
S_GOT = 17
# SER only
S_FBLEN = 14
S_FBLEVEL = 15
S_FBPEAK = 16
STATE_SIZE = 18

# context stack columns
X_TYPE = 0
X_NUM = 1
X_CHILD = 2
X_NEXT = 3
X_NODE = 4
X_TOTAL = 5
CTX_WIDTH = 6

NULL = -1


def new_state(max_depth, mode):
    st = np.zeros(STATE_SIZE, dtype=np.int64)
    st[S_MODE] = mode
    stack = np.zeros((max_depth, CTX_WIDTH), dtype=np.int64)
    return st, stack


@njit(inline="always")
def _data_cycles(nb, phit):
    c = (nb + phit - 1) // phit
    return c if c > 0 else 1


@njit
def des_run(kind, nbytes, child, last, emit_end,
            st, stack, leaf, buf, start, end,
            lbytes, phit, fcap,
            tk, tn, tv, to, obuf):
    """Consume ``buf[start:end]`` and emit tokens into (tk, tn, tv, to, obuf).

    Returns (status, next_pos, ntok, nob).  Mode 0 reads every container count
    from the stream; mode 1 reads array counts and takes lists from frames.
    """
    pos = start
    ntok = 0
    nob = 0
    maxd = stack.shape[0]
    hw = st[S_MODE] == 1
    while True:
        ph = st[S_PHASE]
        if ph == P_DONE or ph == P_ERROR:
            break
        if ntok + 2 * maxd + 4 > tk.shape[0] or nob + leaf.shape[0] > obuf.shape[0]:
            return R_OUT_FULL, pos, ntok, nob

        if st[S_PAD] > 0:
            k = min(st[S_PAD], end - pos)
            pos += k
            st[S_ABS] += k
            st[S_PAD] -= k
            if st[S_PAD] > 0:
                break
            continue

        if ph == P_ADVANCE:
            v = st[S_VISIT]
            while True:
                if last[v] == 0:
                    st[S_VISIT] = v + 1
                    st[S_PHASE] = P_VISIT
                    break
                top = st[S_DEPTH] - 1
                if top < 0:
                    st[S_PHASE] = P_ERROR
                    st[S_ERR] = E_MISMATCH
                    st[S_ERRPOS] = st[S_ABS]
                    break
                if hw and stack[top, X_TYPE] == K_LIST:
                    # framed lists have no count; the end arrives as an empty frame
                    st[S_VISIT] = stack[top, X_CHILD]
                    st[S_PHASE] = P_VISIT
                    break
                stack[top, X_NUM] -= 1
                if stack[top, X_NUM] > 0:
                    st[S_VISIT] = stack[top, X_CHILD]
                    st[S_PHASE] = P_VISIT
                    break
                node = stack[top, X_NODE]
                if stack[top, X_TYPE] == K_LIST:
                    tk[ntok] = T_LEND
                    tn[ntok] = node
                    tv[ntok] = 0
                    to[ntok] = 0
                    ntok += 1
                    st[C_CTRL] += 1
                    st[S_LDEPTH] -= 1
                elif emit_end[node] != 0:
                    tk[ntok] = T_AEND
                    tn[ntok] = node
                    tv[ntok] = 0
                    to[ntok] = 0
                    ntok += 1
                    st[C_CTRL] += 1
                st[S_DEPTH] = top
                st[C_POP] += 1
                nxt = stack[top, X_NEXT]
                if nxt != NULL:
                    st[S_VISIT] = nxt
                    st[S_PHASE] = P_VISIT
                    break
                v = node
            continue

        # P_VISIT
        v = st[S_VISIT]
        k = kind[v]
        if k == K_END:
            st[S_PHASE] = P_DONE
            break

        if hw:
            ld = st[S_LDEPTH]
            if k == K_LIST and ld > 0 and st[S_FREM] > 0 and st[S_GOT] == 0:
                st[S_PHASE] = P_ERROR
                st[S_ERR] = E_FRAME
                st[S_ERRPOS] = st[S_ABS]
                break
            if (k == K_LIST and ld == 0) or (ld > 0 and st[S_FREM] == 0):
                a = st[S_ABS] % phit
                if a != 0:
                    st[S_PAD] = phit - a
                    continue
                if end - pos < phit:
                    break
                bad = False
                for j in range(5, phit):
                    if buf[pos + j] != 0:
                        bad = True
                if bad:
                    st[S_PHASE] = P_ERROR
                    st[S_ERR] = E_HEADER
                    st[S_ERRPOS] = st[S_ABS]
                    break
                size = (np.int64(buf[pos]) | (np.int64(buf[pos + 1]) << 8)
                        | (np.int64(buf[pos + 2]) << 16) | (np.int64(buf[pos + 3]) << 24))
                level = np.int64(buf[pos + 4])
                if level == 0:
                    st[S_PHASE] = P_ERROR
                    st[S_ERR] = E_LEVEL
                    st[S_ERRPOS] = st[S_ABS]
                    break
                hdr_at = st[S_ABS]
                pos += phit
                st[S_ABS] += phit
                st[C_HDR] += 1
                if st[S_GOT] > 0:
                    # only a leaf larger than a whole frame may continue into the next one
                    if not (size > 0 and level == ld and k == K_BYTES and nbytes[v] > fcap and size <= fcap):
                        st[S_PHASE] = P_ERROR
                        st[S_ERR] = E_FRAME
                        st[S_ERRPOS] = hdr_at
                        break
                    st[S_FREM] = size
                    st[S_FPAD] = (phit - size % phit) % phit
                    continue
                if level < ld or size > fcap:
                    st[S_PHASE] = P_ERROR
                    st[S_ERR] = E_FRAME
                    st[S_ERRPOS] = hdr_at
                    break
                failed = False
                while st[S_LDEPTH] < level:
                    lv = st[S_VISIT]
                    if kind[lv] != K_LIST:
                        failed = True
                        break
                    d = st[S_DEPTH]
                    if d >= maxd:
                        st[S_PHASE] = P_ERROR
                        st[S_ERR] = E_DEPTH
                        st[S_ERRPOS] = hdr_at
                        break
                    tk[ntok] = T_LBEGIN
                    tn[ntok] = lv
                    tv[ntok] = 0
                    to[ntok] = 0
                    ntok += 1
                    st[C_CTRL] += 1
                    stack[d, X_TYPE] = K_LIST
                    stack[d, X_NUM] = 0
                    stack[d, X_CHILD] = child[lv]
                    stack[d, X_NEXT] = lv + 1 if last[lv] == 0 else NULL
                    stack[d, X_NODE] = lv
                    stack[d, X_TOTAL] = 0
                    st[S_DEPTH] = d + 1
                    st[S_LDEPTH] += 1
                    st[C_PUSH] += 1
                    st[S_VISIT] = child[lv]
                if st[S_PHASE] == P_ERROR:
                    break
                if failed:
                    st[S_PHASE] = P_ERROR
                    st[S_ERR] = E_FRAME
                    st[S_ERRPOS] = hdr_at
                    break
                if size == 0:
                    top = st[S_DEPTH] - 1
                    if stack[top, X_TYPE] != K_LIST or st[S_VISIT] != stack[top, X_CHILD]:
                        st[S_PHASE] = P_ERROR
                        st[S_ERR] = E_FRAME
                        st[S_ERRPOS] = hdr_at
                        break
                    node = stack[top, X_NODE]
                    tk[ntok] = T_LEND
                    tn[ntok] = node
                    tv[ntok] = 0
                    to[ntok] = 0
                    ntok += 1
                    st[C_CTRL] += 1
                    st[S_DEPTH] = top
                    st[S_LDEPTH] -= 1
                    st[C_POP] += 1
                    st[S_VISIT] = node
                    st[S_PHASE] = P_ADVANCE
                    continue
                st[S_FREM] = size
                st[S_FPAD] = (phit - size % phit) % phit
                continue

        # gather a leaf or a count
        need = nbytes[v] if k == K_BYTES else lbytes
        framed = hw and st[S_LDEPTH] > 0
        avail = end - pos
        if framed and st[S_FREM] < avail:
            avail = st[S_FREM]
        got = st[S_GOT]
        take = need - got
        if avail < take:
            take = avail
        for j in range(take):
            leaf[got + j] = buf[pos + j]
        pos += take
        st[S_ABS] += take
        got += take
        st[S_GOT] = got
        if framed:
            st[S_FREM] -= take
            if st[S_FREM] == 0:
                st[S_PAD] = st[S_FPAD]
        if got < need:
            if framed and st[S_FREM] == 0:
                if not (k == K_BYTES and need > fcap):
                    st[S_PHASE] = P_ERROR
                    st[S_ERR] = E_FRAME
                    st[S_ERRPOS] = st[S_ABS]
                    break
                continue
            break
        st[S_GOT] = 0

        if k == K_BYTES:
            for j in range(need):
                obuf[nob + j] = leaf[j]
            tk[ntok] = T_DATA
            tn[ntok] = v
            tv[ntok] = need
            to[ntok] = nob
            ntok += 1
            nob += need
            st[C_DATA_CYC] += _data_cycles(need, phit)
            st[C_DATA_TOK] += 1
            st[S_PHASE] = P_ADVANCE
            continue

        cnt = np.int64(0)
        for j in range(lbytes):
            cnt |= np.int64(leaf[j]) << (8 * j)
        tk[ntok] = T_ALEN if k == K_ARRAY else T_LBEGIN
        tn[ntok] = v
        tv[ntok] = cnt
        to[ntok] = 0
        ntok += 1
        st[C_CTRL] += 1
        if cnt == 0:
            if k == K_LIST or emit_end[v] != 0:
                tk[ntok] = T_LEND if k == K_LIST else T_AEND
                tn[ntok] = v
                tv[ntok] = 0
                to[ntok] = 0
                ntok += 1
                st[C_CTRL] += 1
            st[S_PHASE] = P_ADVANCE
            continue
        d = st[S_DEPTH]
        if d >= maxd:
            st[S_PHASE] = P_ERROR
            st[S_ERR] = E_DEPTH
            st[S_ERRPOS] = st[S_ABS]
            break
        stack[d, X_TYPE] = k
        stack[d, X_NUM] = cnt
        stack[d, X_CHILD] = child[v]
        stack[d, X_NEXT] = v + 1 if last[v] == 0 else NULL
        stack[d, X_NODE] = v
        stack[d, X_TOTAL] = cnt
        st[S_DEPTH] = d + 1
        if k == K_LIST:
            st[S_LDEPTH] += 1
        st[C_PUSH] += 1
        st[S_VISIT] = child[v]

    if st[S_PHASE] == P_ERROR:
        return R_ERROR, pos, ntok, nob
    return R_OK, pos, ntok, nob


@njit(inline="always")
def _ser_align(st, out, nout, phit):
    while st[S_ABS] % phit != 0:
        out[nout] = 0
        nout += 1
        st[S_ABS] += 1
    return nout


@njit(inline="always")
def _ser_header(st, out, nout, phit, size, level):
    nout = _ser_align(st, out, nout, phit)
    out[nout] = size & 0xFF
    out[nout + 1] = (size >> 8) & 0xFF
    out[nout + 2] = (size >> 16) & 0xFF
    out[nout + 3] = (size >> 24) & 0xFF
    out[nout + 4] = level
    for j in range(5, phit):
        out[nout + j] = 0
    nout += phit
    st[S_ABS] += phit
    st[C_HDR] += 1
    return nout


@njit(inline="always")
def _ser_flush(st, fbuf, out, nout, phit):
    n = st[S_FBLEN]
    if n == 0:
        return nout
    nout = _ser_header(st, out, nout, phit, n, st[S_FBLEVEL])
    for j in range(n):
        out[nout + j] = fbuf[j]
    nout += n
    st[S_ABS] += n
    st[S_FBLEN] = 0
    return _ser_align(st, out, nout, phit)


@njit(inline="always")
def _ser_put(st, fbuf, out, nout, src, off, nb, phit, fcap, hw):
    """Write nb bytes of src[off:] to the stream, framed while a list is open."""
    if not hw or st[S_LDEPTH] == 0:
        for j in range(nb):
            out[nout + j] = src[off + j]
        st[S_ABS] += nb
        return nout + nb
    if st[S_FBLEN] + nb > fcap and nb <= fcap:
        nout = _ser_flush(st, fbuf, out, nout, phit)
    j = 0
    while j < nb:
        fl = st[S_FBLEN]
        k = min(nb - j, fcap - fl)
        for q in range(k):
            fbuf[fl + q] = src[off + j + q]
        j += k
        fl += k
        st[S_FBLEN] = fl
        st[S_FBLEVEL] = st[S_LDEPTH]
        if fl > st[S_FBPEAK]:
            st[S_FBPEAK] = fl
        if fl == fcap:
            nout = _ser_flush(st, fbuf, out, nout, phit)
    return nout


@njit(inline="always")
def _ser_count(st, fbuf, out, nout, scratch, cnt, lbytes, phit, fcap, hw):
    for j in range(lbytes):
        scratch[j] = (cnt >> (8 * j)) & 0xFF
    return _ser_put(st, fbuf, out, nout, scratch, 0, lbytes, phit, fcap, hw)


@njit(inline="always")
def _ser_error(st, code, pos):
    st[S_PHASE] = P_ERROR
    st[S_ERR] = code
    st[S_ERRPOS] = pos


@njit(inline="always")
def settle(kind, st):
    if st[S_PHASE] == P_VISIT and kind[st[S_VISIT]] == K_END:
        st[S_PHASE] = P_DONE


@njit
def ser_run(kind, nbytes, child, last,
            st, stack, fbuf, scratch,
            ik, iv, ioff, blob, first, count,
            lbytes, phit, fcap, out):
    """Serialize tokens ``first .. first+count-1``; returns (status, next_token, nout).

    Mode 0 writes container counts after their elements; mode 1 writes array
    counts up front and frames everything inside lists.
    """
    hw = st[S_MODE] == 1
    maxd = stack.shape[0]
    nout = 0
    count_max = np.int64(1) << (8 * lbytes) if lbytes < 8 else np.int64(0x7FFFFFFFFFFFFFFF)
    i = first
    stop = first + count
    while i < stop:
        if st[S_PHASE] == P_ERROR:
            break
        if st[S_PHASE] == P_DONE:
            _ser_error(st, E_TRAILING, i)
            break
        tkind = ik[i]
        nb = iv[i] if tkind == T_DATA else 0
        worst = fcap + nb + (nb // fcap + 4) * 2 * phit + (maxd + 2) * lbytes + 4 * phit
        if nout + worst > out.shape[0]:
            return R_OUT_FULL, i, nout

        handled = False
        while not handled:
            v = st[S_VISIT]
            k = kind[v]
            d = st[S_DEPTH]
            top = d - 1
            at_elem_start = (top >= 0 and stack[top, X_TYPE] == K_LIST
                             and v == stack[top, X_CHILD])
            if tkind == T_LEND:
                level = iv[i]
                if at_elem_start and level == st[S_LDEPTH]:
                    # close the innermost list
                    if hw:
                        nout = _ser_flush(st, fbuf, out, nout, phit)
                        nout = _ser_header(st, out, nout, phit, 0, st[S_LDEPTH])
                    else:
                        n = stack[top, X_NUM]
                        if n >= count_max:
                            _ser_error(st, E_COUNT, i)
                            break
                        nout = _ser_count(st, fbuf, out, nout, scratch, n, lbytes, phit, fcap, hw)
                    st[C_CTRL] += 1
                    st[S_DEPTH] = top
                    st[S_LDEPTH] -= 1
                    st[C_POP] += 1
                    st[S_VISIT] = stack[top, X_NODE]
                    st[S_PHASE] = P_ADVANCE
                    handled = True
                    break
                if not (k == K_LIST and level > st[S_LDEPTH]):
                    if k == K_LIST or at_elem_start:
                        _ser_error(st, E_LIST_LEVEL, i)
                    else:
                        _ser_error(st, E_MISMATCH, i)
                    break
            if k == K_LIST:
                # lists have no begin token: open on first contact
                if d >= maxd:
                    _ser_error(st, E_DEPTH, i)
                    break
                if hw:
                    nout = _ser_flush(st, fbuf, out, nout, phit)
                stack[d, X_TYPE] = K_LIST
                stack[d, X_NUM] = 0
                stack[d, X_CHILD] = child[v]
                stack[d, X_NEXT] = v + 1 if last[v] == 0 else NULL
                stack[d, X_NODE] = v
                stack[d, X_TOTAL] = 0
                st[S_DEPTH] = d + 1
                st[S_LDEPTH] += 1
                st[C_PUSH] += 1
                st[C_CTRL] += 1
                st[S_VISIT] = child[v]
                continue
            if k == K_BYTES:
                if tkind != T_DATA or nb != nbytes[v]:
                    _ser_error(st, E_MISMATCH, i)
                    break
                nout = _ser_put(st, fbuf, out, nout, blob, ioff[i], nb, phit, fcap, hw)
                st[C_DATA_CYC] += _data_cycles(nb, phit)
                st[C_DATA_TOK] += 1
                st[S_PHASE] = P_ADVANCE
                handled = True
                break
            if k == K_ARRAY:
                if tkind != T_ALEN:
                    _ser_error(st, E_MISMATCH, i)
                    break
                n = iv[i]
                if n < 0 or n >= count_max:
                    _ser_error(st, E_COUNT, i)
                    break
                st[C_CTRL] += 1
                if hw:
                    nout = _ser_count(st, fbuf, out, nout, scratch, n, lbytes, phit, fcap, hw)
                if n == 0:
                    if not hw:
                        nout = _ser_count(st, fbuf, out, nout, scratch, n, lbytes, phit, fcap, hw)
                    st[S_PHASE] = P_ADVANCE
                    handled = True
                    break
                if d >= maxd:
                    _ser_error(st, E_DEPTH, i)
                    break
                stack[d, X_TYPE] = K_ARRAY
                stack[d, X_NUM] = n
                stack[d, X_CHILD] = child[v]
                stack[d, X_NEXT] = v + 1 if last[v] == 0 else NULL
                stack[d, X_NODE] = v
                stack[d, X_TOTAL] = n
                st[S_DEPTH] = d + 1
                st[C_PUSH] += 1
                st[S_VISIT] = child[v]
                st[S_PHASE] = P_VISIT
                handled = True
                break
            _ser_error(st, E_MISMATCH, i)
            break
        if st[S_PHASE] == P_ERROR:
            break

        if st[S_PHASE] == P_ADVANCE:
            v = st[S_VISIT]
            while True:
                if last[v] == 0:
                    st[S_VISIT] = v + 1
                    break
                top = st[S_DEPTH] - 1
                if top < 0:
                    _ser_error(st, E_MISMATCH, i)
                    break
                if stack[top, X_TYPE] == K_LIST:
                    stack[top, X_NUM] += 1
                    st[S_VISIT] = stack[top, X_CHILD]
                    break
                stack[top, X_NUM] -= 1
                if stack[top, X_NUM] > 0:
                    st[S_VISIT] = stack[top, X_CHILD]
                    break
                if not hw:
                    nout = _ser_count(st, fbuf, out, nout, scratch, stack[top, X_TOTAL],
                                      lbytes, phit, fcap, hw)
                st[S_DEPTH] = top
                st[C_POP] += 1
                nxt = stack[top, X_NEXT]
                if nxt != NULL:
                    st[S_VISIT] = nxt
                    break
                v = stack[top, X_NODE]
            if st[S_PHASE] == P_ERROR:
                break
            st[S_PHASE] = P_VISIT
            settle(kind, st)
        i += 1

    if st[S_PHASE] == P_ERROR:
        return R_ERROR, i, nout
    return R_OK, i, nout


@njit
def reverse_to_forward(kind, nbytes, child, run_last, buf, lbytes, max_depth):
    """Rewrite a trailing-count buffer into the leading-count layout.

    Reads from the tail of ``buf`` (fields in reverse, each container's count
    first) and writes the output from its tail, so the result is the forward
    layout byte for byte.  Returns (error_code, out).
    """
    n = buf.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    r = n
    w = n
    top_last = run_last[0]
    if kind[top_last] == K_END:
        top_last -= 1
    depth = max_depth + 1
    f_cur = np.zeros(depth, dtype=np.int64)
    f_first = np.zeros(depth, dtype=np.int64)
    f_rem = np.zeros(depth, dtype=np.int64)
    f_cnt = np.zeros(depth, dtype=np.int64)
    sp = 0
    f_cur[0] = top_last
    f_first[0] = 0
    f_rem[0] = 1
    f_cnt[0] = -1
    while True:
        if f_cur[sp] < f_first[sp]:
            f_rem[sp] -= 1
            if f_rem[sp] > 0:
                f_cur[sp] = run_last[f_first[sp]]
                continue
            if sp == 0:
                break
            c = f_cnt[sp]
            w -= lbytes
            for j in range(lbytes):
                out[w + j] = (c >> (8 * j)) & 0xFF
            sp -= 1
            f_cur[sp] -= 1
            continue
        v = f_cur[sp]
        if kind[v] == K_BYTES:
            nb = nbytes[v]
            r -= nb
            if r < 0:
                return E_TRUNCATED, out
            w -= nb
            for j in range(nb):
                out[w + j] = buf[r + j]
            f_cur[sp] -= 1
            continue
        r -= lbytes
        if r < 0:
            return E_TRUNCATED, out
        c = np.int64(0)
        for j in range(lbytes):
            c |= np.int64(buf[r + j]) << (8 * j)
        if c == 0:
            w -= lbytes
            for j in range(lbytes):
                out[w + j] = 0
            f_cur[sp] -= 1
            continue
        if sp + 1 >= depth:
            return E_TRUNCATED, out
        sp += 1
        f_first[sp] = child[v]
        f_cur[sp] = run_last[child[v]]
        f_rem[sp] = c
        f_cnt[sp] = c
        if c > r:
            # every element occupies at least one byte
            return E_TRUNCATED, out
    if r != 0:
        return E_TRAILING, out
    return E_NONE, out


@njit
def level_of_list_ends(tk):
    """Nesting level carried by each list-end in a DES token stream (0 elsewhere)."""
    n = tk.shape[0]
    lv = np.zeros(n, dtype=np.int64)
    depth = 0
    for i in range(n):
        t = tk[i]
        if t == T_LBEGIN:
            depth += 1
        elif t == T_LEND:
            if depth <= 0:
                return -1 - i, lv
            lv[i] = depth
            depth -= 1
    if depth != 0:
        return -1 - n, lv
    return 0, lv
