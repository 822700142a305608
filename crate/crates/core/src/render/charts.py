# @@ helpers
def tx(s):
    return str(s).replace("$", r"\$")


def base(sp):
    return [s for s in sp["series"] if s.get("role", "base") == "base"]


def overlay(sp):
    return [s for s in sp["series"] if s.get("role") == "overlay"]


def colors_for(st, n):
    cs = list(st.get("colors") or [])
    if not cs:
        cs = plt.rcParams["axes.prop_cycle"].by_key().get("color", ["C0"])
    return [cs[i % len(cs)] for i in range(n)]


def many_colors(st, n):
    cs = list(st.get("colors") or [])
    if len(cs) >= n:
        return cs[:n]
    cmap = plt.get_cmap(st.get("colormap") or "tab20")
    return [cmap(i / max(n - 1, 1)) if cmap.N > 20 else cmap(i % cmap.N) for i in range(n)]


def pick(st, key, i, default):
    v = st.get(key) or []
    return v[i % len(v)] if v else default


def is_numeric(xs):
    return all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in xs)


def positions(ax, xs):
    if is_numeric(xs):
        return np.asarray(xs, dtype=float)
    pos = np.arange(len(xs))
    set_cats(ax, xs, pos)
    return pos


def set_cats(ax, labels, pos):
    labels = [tx(v) for v in labels]
    step = max(1, len(labels) // 12)
    ax.set_xticks(pos[::step])
    long = len(labels) > 4 or max(len(v) for v in labels) > 8
    ax.set_xticklabels(labels[::step], rotation=30 if long else 0, ha="right" if long else "center")


def kde(samples, grid):
    data = np.asarray(samples, dtype=float)
    sd = data.std(ddof=1) if len(data) > 1 else 1.0
    bw = 1.06 * (sd if sd > 0 else 1.0) * len(data) ** (-0.2)
    z = (grid[:, None] - data[None, :]) / bw
    return np.exp(-0.5 * z * z).sum(axis=1) / (len(data) * bw * np.sqrt(2 * np.pi))


def kde_grid(samples):
    lo, hi = min(samples), max(samples)
    pad = (hi - lo) * 0.15 or 1.0
    return np.linspace(lo - pad, hi + pad, 200)


def finish(ax, sp, st):
    ax.set_title(tx(sp["title"]))
    ax.set_xlabel(tx(sp["x_label"]))
    ax.set_ylabel(tx(sp["y_label"]))
    if st.get("grid") is not None:
        ax.grid(bool(st["grid"]), alpha=0.3)
    handles, labels = ax.get_legend_handles_labels()
    if len(labels) > 1:
        ax.legend(loc=st.get("legend_loc") or "best", fontsize="small")
    for a in sp.get("annotations", []):
        kind, x, y, text = a["kind"], a["x"], a["y"], tx(a.get("text", ""))
        if kind == "text":
            ax.annotate(text, (x, y), textcoords="offset points", xytext=(0, 8), ha="center", fontsize="small")
        elif kind == "arrow":
            ax.annotate(text, (x, y), textcoords="offset points", xytext=(25, 25), fontsize="small",
                        arrowprops=dict(arrowstyle="->", color="0.3"))
        elif kind == "hline":
            ax.axhline(y, linestyle="--", linewidth=1, color="0.4")
        elif kind == "vline":
            ax.axvline(x, linestyle="--", linewidth=1, color="0.4")
        elif kind == "highlight":
            ax.axvspan(x - 0.5, x + 0.5, color="gold", alpha=0.2)


def squarify(values, x, y, w, h):
    if not values:
        return []
    if len(values) == 1:
        return [(x, y, w, h)]
    total = sum(values)
    acc, split = 0.0, 1
    for i, v in enumerate(values):
        acc += v
        if acc >= total / 2:
            split = max(1, min(i + 1, len(values) - 1))
            break
    left = sum(values[:split]) / total
    if w >= h:
        return squarify(values[:split], x, y, w * left, h) + squarify(values[split:], x + w * left, y, w * (1 - left), h)
    return squarify(values[:split], x, y, w, h * left) + squarify(values[split:], x, y + h * left, w, h * (1 - left))


def side_axes(ax, size="22%"):
    from mpl_toolkits.axes_grid1 import make_axes_locatable
    return make_axes_locatable(ax).append_axes("right", size=size, pad=0.1, sharey=ax)


# @@ line
def draw_line(fig, ax, sp, st):
    ss = base(sp)
    cs = colors_for(st, len(ss))
    for i, s in enumerate(ss):
        ax.plot(positions(ax, s["x"]), s["y"], color=cs[i], marker=pick(st, "markers", i, None),
                linestyle=pick(st, "line_styles", i, "-"), linewidth=st.get("line_width") or 2.0,
                alpha=st.get("alpha") or 1.0, label=tx(s["label"]))
    finish(ax, sp, st)


# @@ bar
def draw_bar(fig, ax, sp, st):
    ss = base(sp)
    cs = colors_for(st, len(ss))
    pos = np.arange(len(ss[0]["x"]))
    w = 0.8 / len(ss)
    for i, s in enumerate(ss):
        ax.bar(pos + (i - (len(ss) - 1) / 2) * w, s["y"], width=w, color=cs[i], alpha=st.get("alpha") or 1.0,
               label=tx(s["label"]))
    set_cats(ax, ss[0]["x"], pos)
    finish(ax, sp, st)


# @@ pie
def draw_pie(fig, ax, sp, st):
    s = base(sp)[0]
    ax.pie(s["y"], labels=[tx(v) for v in s["x"]], colors=many_colors(st, len(s["y"])), autopct="%1.1f%%",
           startangle=90, textprops={"fontsize": "small"}, wedgeprops={"alpha": st.get("alpha") or 1.0})
    ax.axis("equal")
    ax.set_title(tx(sp["title"]))


# @@ area
def draw_area(fig, ax, sp, st):
    ss = base(sp)
    xs = positions(ax, ss[0]["x"])
    ax.stackplot(xs, *[s["y"] for s in ss], labels=[tx(s["label"]) for s in ss], colors=colors_for(st, len(ss)),
                 alpha=st.get("alpha") or 0.8)
    finish(ax, sp, st)


# @@ errorpoint
def draw_errorpoint(fig, ax, sp, st):
    ss = base(sp)
    cs = colors_for(st, len(ss))
    pos = np.arange(len(ss[0]["x"]))
    for i, s in enumerate(ss):
        off = (i - (len(ss) - 1) / 2) * 0.15
        ax.errorbar(pos + off, s["y"], yerr=s["aux"]["err"], fmt=pick(st, "markers", i, "o"), capsize=4,
                    color=cs[i], label=tx(s["label"]))
    set_cats(ax, ss[0]["x"], pos)
    finish(ax, sp, st)


# @@ treemap
def draw_treemap(fig, ax, sp, st):
    s = base(sp)[0]
    order = sorted(range(len(s["y"])), key=lambda i: -s["y"][i])
    vals = [s["y"][i] for i in order]
    rects = squarify(vals, 0.0, 0.0, 1.0, 1.0)
    cs = many_colors(st, len(vals))
    for k, (i, (x, y, w, h)) in enumerate(zip(order, rects)):
        ax.add_patch(plt.Rectangle((x, y), w, h, facecolor=cs[k], edgecolor="white", linewidth=2,
                                   alpha=st.get("alpha") or 0.9))
        ax.text(x + w / 2, y + h / 2, "%s\n%s" % (tx(s["x"][i]), s["y"][i]), ha="center", va="center",
                fontsize="small", clip_on=True)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.axis("off")
    ax.set_title(tx(sp["title"]))


# @@ funnel
def draw_funnel(fig, ax, sp, st):
    s = base(sp)[0]
    ys = np.asarray(s["y"], dtype=float)
    pos = np.arange(len(ys))
    ax.barh(pos, ys, left=-ys / 2, color=many_colors(st, len(ys)), alpha=st.get("alpha") or 0.9)
    for p, v in zip(pos, s["y"]):
        ax.text(0, p, str(v), ha="center", va="center", fontsize="small")
    ax.set_yticks(pos)
    ax.set_yticklabels([tx(v) for v in s["x"]])
    ax.invert_yaxis()
    ax.set_xticks([])
    ax.set_title(tx(sp["title"]))
    ax.set_xlabel(tx(sp["y_label"]))


# @@ node
def draw_node(fig, ax, sp, st):
    s = base(sp)[0]
    n = len(s["x"])
    ang = np.linspace(0, 2 * np.pi, n, endpoint=False)
    px, py = np.cos(ang), np.sin(ang)
    for i, t in enumerate(s["aux"]["target"]):
        t = int(t)
        if t != i:
            ax.annotate("", xy=(px[t], py[t]), xytext=(px[i], py[i]),
                        arrowprops=dict(arrowstyle="->", color="0.5", shrinkA=12, shrinkB=12))
    w = np.asarray(s["y"], dtype=float)
    ax.scatter(px, py, s=300 + 1200 * w / w.max(), c=many_colors(st, n), alpha=st.get("alpha") or 0.9, zorder=3,
               edgecolors="k")
    for i in range(n):
        ax.text(px[i] * 1.25, py[i] * 1.25, tx(s["x"][i]), ha="center", va="center", fontsize="small")
    ax.set_xlim(-1.6, 1.6)
    ax.set_ylim(-1.6, 1.6)
    ax.set_aspect("equal")
    ax.axis("off")
    ax.set_title(tx(sp["title"]))


# @@ density
def draw_density(fig, ax, sp, st):
    ss = base(sp)
    cs = colors_for(st, len(ss))
    for i, s in enumerate(ss):
        grid = kde_grid(s["y"])
        d = kde(s["y"], grid)
        ax.plot(grid, d, color=cs[i], label=tx(s["label"]))
        ax.fill_between(grid, d, color=cs[i], alpha=(st.get("alpha") or 0.6) * 0.4)
    sp = dict(sp, x_label=sp["y_label"], y_label="Density")
    finish(ax, sp, st)


# @@ histogram
def draw_histogram(fig, ax, sp, st):
    ss = base(sp)
    cs = colors_for(st, len(ss))
    for i, s in enumerate(ss):
        ax.hist(s["y"], bins=15, color=cs[i], alpha=st.get("alpha") or 0.7, edgecolor="white", label=tx(s["label"]))
    sp = dict(sp, x_label=sp["y_label"], y_label="Count")
    finish(ax, sp, st)


# @@ box
def draw_box(fig, ax, sp, st):
    ss = base(sp)
    bp = ax.boxplot([s["y"] for s in ss], tick_labels=[tx(s["label"]) for s in ss], patch_artist=True)
    for patch, c in zip(bp["boxes"], colors_for(st, len(ss))):
        patch.set_facecolor(c)
        patch.set_alpha(st.get("alpha") or 0.8)
    sp = dict(sp, x_label="")
    finish(ax, sp, st)


# @@ bubble
def draw_bubble(fig, ax, sp, st):
    ss = base(sp)
    cs = colors_for(st, len(ss))
    for i, s in enumerate(ss):
        ax.scatter(s["x"], s["y"], s=np.asarray(s["aux"]["size"], dtype=float) * 8, color=cs[i],
                   alpha=st.get("alpha") or 0.6, edgecolors="k", label=tx(s["label"]))
    finish(ax, sp, st)


# @@ candlestick
def draw_candlestick(fig, ax, sp, st):
    s = base(sp)[0]
    a = s["aux"]
    pos = np.arange(len(s["x"]))
    up, down = colors_for(dict(colors=["#2ca02c", "#d62728"]), 2)
    for i in pos:
        o, h, l, c = a["open"][i], a["high"][i], a["low"][i], a["close"][i]
        col = up if c >= o else down
        ax.vlines(i, l, h, color=col, linewidth=1)
        ax.add_patch(plt.Rectangle((i - 0.3, min(o, c)), 0.6, abs(c - o) or (h - l) * 0.01, color=col))
    ax.set_xlim(-1, len(pos))
    ax.set_ylim(min(a["low"]) * 0.98, max(a["high"]) * 1.02)
    set_cats(ax, s["x"], pos)
    finish(ax, sp, st)


# @@ heatmap
def draw_heatmap(fig, ax, sp, st):
    ss = base(sp)
    m = np.asarray([s["y"] for s in ss], dtype=float)
    im = ax.imshow(m, cmap=st.get("colormap") or "viridis", aspect="auto")
    ax.set_xticks(np.arange(m.shape[1]))
    ax.set_xticklabels([tx(v) for v in ss[0]["x"]], rotation=30 if m.shape[1] > 6 else 0)
    ax.set_yticks(np.arange(m.shape[0]))
    ax.set_yticklabels([tx(s["label"]) for s in ss])
    if m.size <= 60:
        mid = (m.max() + m.min()) / 2
        for r in range(m.shape[0]):
            for c in range(m.shape[1]):
                ax.text(c, r, "%g" % m[r, c], ha="center", va="center", fontsize="x-small",
                        color="white" if m[r, c] < mid else "black")
    fig.colorbar(im, ax=ax)
    ax.set_title(tx(sp["title"]))
    ax.set_xlabel(tx(sp["x_label"]))


# @@ radar
def draw_radar(fig, ax, sp, st):
    ss = base(sp)
    cs = colors_for(st, len(ss))
    n = len(ss[0]["x"])
    ang = np.linspace(0, 2 * np.pi, n, endpoint=False).tolist()
    for i, s in enumerate(ss):
        ys = list(s["y"]) + [s["y"][0]]
        ax.plot(ang + ang[:1], ys, color=cs[i], marker=pick(st, "markers", i, None),
                linestyle=pick(st, "line_styles", i, "-"), linewidth=st.get("line_width") or 2.0, label=tx(s["label"]))
        ax.fill(ang + ang[:1], ys, color=cs[i], alpha=0.15)
    ax.set_xticks(ang)
    ax.set_xticklabels([tx(v) for v in ss[0]["x"]], fontsize="small")
    ax.set_title(tx(sp["title"]), pad=18)
    handles, labels = ax.get_legend_handles_labels()
    if len(labels) > 1:
        ax.legend(loc="upper right", bbox_to_anchor=(1.25, 1.1), fontsize="small")


# @@ rose
def draw_rose(fig, ax, sp, st):
    s = base(sp)[0]
    n = len(s["y"])
    ang = np.linspace(0, 2 * np.pi, n, endpoint=False)
    ax.bar(ang, s["y"], width=2 * np.pi / n, color=many_colors(st, n), alpha=st.get("alpha") or 0.85,
           edgecolor="white")
    ax.set_xticks(ang)
    ax.set_xticklabels([tx(v) for v in s["x"]], fontsize="small")
    ax.set_title(tx(sp["title"]), pad=18)


# @@ 3d
def draw_3d(fig, ax, sp, st):
    ss = base(sp)
    cs = colors_for(st, len(ss))
    n = len(ss[0]["x"])
    for j, s in enumerate(ss):
        ax.bar3d(np.arange(n) - 0.3, np.full(n, j) - 0.3, np.zeros(n), 0.6, 0.6, s["y"], color=cs[j],
                 alpha=st.get("alpha") or 0.85, shade=True)
    ax.set_xticks(np.arange(n))
    ax.set_xticklabels([tx(v) for v in ss[0]["x"]], fontsize="x-small")
    ax.set_yticks(np.arange(len(ss)))
    ax.set_yticklabels([tx(s["label"]) for s in ss], fontsize="x-small")
    ax.set_zlabel(tx(sp["y_label"]))
    ax.set_title(tx(sp["title"]))


# @@ errorbar
def draw_errorbar(fig, ax, sp, st):
    ss = base(sp)
    cs = colors_for(st, len(ss))
    pos = np.arange(len(ss[0]["x"]))
    w = 0.8 / len(ss)
    for i, s in enumerate(ss):
        ax.bar(pos + (i - (len(ss) - 1) / 2) * w, s["y"], width=w, yerr=s["aux"]["err"], capsize=4, color=cs[i],
               alpha=st.get("alpha") or 0.9, label=tx(s["label"]))
    set_cats(ax, ss[0]["x"], pos)
    finish(ax, sp, st)


# @@ quiver
def draw_quiver(fig, ax, sp, st):
    s = base(sp)[0]
    u = np.asarray(s["aux"]["u"], dtype=float)
    v = np.asarray(s["aux"]["v"], dtype=float)
    q = ax.quiver(s["x"], s["y"], u, v, np.hypot(u, v), cmap=st.get("colormap") or "viridis")
    ax.margins(0.15)
    ax.set_aspect("equal", adjustable="datalim")
    fig.colorbar(q, ax=ax, label="Magnitude")
    finish(ax, sp, st)


# @@ scatter
def draw_scatter(fig, ax, sp, st):
    ss = base(sp)
    cs = colors_for(st, len(ss))
    for i, s in enumerate(ss):
        ax.scatter(s["x"], s["y"], color=cs[i], marker=pick(st, "markers", i, "o"), alpha=st.get("alpha") or 0.8,
                   label=tx(s["label"]))
    finish(ax, sp, st)


# @@ violin
def draw_violin(fig, ax, sp, st):
    ss = base(sp)
    parts = ax.violinplot([s["y"] for s in ss], showmedians=True)
    for body, c in zip(parts["bodies"], colors_for(st, len(ss))):
        body.set_facecolor(c)
        body.set_alpha(st.get("alpha") or 0.7)
    set_cats(ax, [s["label"] for s in ss], np.arange(1, len(ss) + 1))
    sp = dict(sp, x_label="")
    finish(ax, sp, st)


# @@ contour
def draw_contour(fig, ax, sp, st):
    ss = base(sp)
    xs = np.asarray(ss[0]["x"], dtype=float)
    ys = np.asarray([float(s["label"]) for s in ss])
    z = np.asarray([s["y"] for s in ss], dtype=float)
    cf = ax.contourf(xs, ys, z, levels=12, cmap=st.get("colormap") or "viridis")
    ax.contour(xs, ys, z, levels=12, colors="k", linewidths=0.4, alpha=0.5)
    fig.colorbar(cf, ax=ax)
    finish(ax, sp, st)


# @@ bar+line
def draw_bar_line(fig, ax, sp, st):
    b, o = base(sp)[0], overlay(sp)[0]
    cs = colors_for(st, 2)
    pos = np.arange(len(b["x"]))
    ax.bar(pos, b["y"], color=cs[0], alpha=st.get("alpha") or 0.85, label=tx(b["label"]))
    ax2 = ax.twinx()
    ax2.plot(pos, o["y"], color=cs[1] if len(cs) > 1 and cs[1] != cs[0] else "#d62728", marker="o", linewidth=2,
             label=tx(o["label"]))
    ax2.set_ylabel(tx(o["label"]))
    set_cats(ax, b["x"], pos)
    h1, l1 = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(h1 + h2, l1 + l2, loc=st.get("legend_loc") or "upper left", fontsize="small")
    ax.set_title(tx(sp["title"]))
    ax.set_xlabel(tx(sp["x_label"]))
    ax.set_ylabel(tx(sp["y_label"]))
    if st.get("grid") is not None:
        ax.grid(bool(st["grid"]), alpha=0.3)


# @@ pie+bar
def draw_pie_bar(fig, ax, sp, st):
    from mpl_toolkits.axes_grid1 import make_axes_locatable
    b, o = base(sp)[0], overlay(sp)[0]
    cs = many_colors(st, len(b["y"]))
    ax.pie(b["y"], labels=[tx(v) for v in b["x"]], colors=cs, autopct="%1.0f%%", startangle=90,
           explode=[0.08] + [0] * (len(b["y"]) - 1), textprops={"fontsize": "small"})
    ax.axis("equal")
    ax.set_title(tx(sp["title"]))
    bx = make_axes_locatable(ax).append_axes("right", size="45%", pad=0.5)
    pos = np.arange(len(o["y"]))
    bx.bar(pos, o["y"], color=cs[0], alpha=0.85, edgecolor="white")
    set_cats(bx, o["x"], pos)
    bx.set_title(tx(o["label"]), fontsize="small")


# @@ histogram+density
def draw_histogram_density(fig, ax, sp, st):
    b, o = base(sp)[0], overlay(sp)[0]
    cs = colors_for(st, 2)
    ax.hist(b["y"], bins=18, density=True, color=cs[0], alpha=st.get("alpha") or 0.6, edgecolor="white",
            label=tx(b["label"]))
    grid = kde_grid(o["y"])
    ax.plot(grid, kde(o["y"], grid), color="#222222", linewidth=2, label=tx(o["label"]))
    sp = dict(sp, x_label=sp["y_label"], y_label="Density")
    finish(ax, sp, st)


# @@ violin+box
def draw_violin_box(fig, ax, sp, st):
    b, o = base(sp), overlay(sp)
    parts = ax.violinplot([s["y"] for s in b], showextrema=False)
    for body, c in zip(parts["bodies"], colors_for(st, len(b))):
        body.set_facecolor(c)
        body.set_alpha(st.get("alpha") or 0.5)
    ax.boxplot([s["y"] for s in o], widths=0.15, positions=np.arange(1, len(o) + 1), showfliers=False)
    set_cats(ax, [s["label"] for s in b], np.arange(1, len(b) + 1))
    sp = dict(sp, x_label="")
    finish(ax, sp, st)


# @@ scatter+histogram
def draw_scatter_histogram(fig, ax, sp, st):
    b, o = base(sp)[0], overlay(sp)[0]
    c = colors_for(st, 1)[0]
    ax.scatter(b["x"], b["y"], color=c, alpha=st.get("alpha") or 0.7, label=tx(b["label"]))
    finish(ax, sp, st)
    side = side_axes(ax)
    side.hist(o["y"], bins=15, orientation="horizontal", color=c, alpha=0.6)
    side.tick_params(axis="y", labelleft=False)
    side.set_xlabel("Count")


# @@ scatter+density
def draw_scatter_density(fig, ax, sp, st):
    b, o = base(sp)[0], overlay(sp)[0]
    c = colors_for(st, 1)[0]
    ax.scatter(b["x"], b["y"], color=c, alpha=st.get("alpha") or 0.7, label=tx(b["label"]))
    finish(ax, sp, st)
    side = side_axes(ax)
    grid = kde_grid(o["y"])
    d = kde(o["y"], grid)
    side.plot(d, grid, color=c)
    side.fill_betweenx(grid, d, color=c, alpha=0.3)
    side.tick_params(axis="y", labelleft=False)
    side.set_xlabel("Density")


# @@ hexbin+hist
def draw_hexbin_hist(fig, ax, sp, st):
    b, o = base(sp)[0], overlay(sp)[0]
    hb = ax.hexbin(b["x"], b["y"], gridsize=15, cmap=st.get("colormap") or "Blues", mincnt=1)
    finish(ax, sp, st)
    side = side_axes(ax)
    side.hist(o["y"], bins=15, orientation="horizontal", color="0.4", alpha=0.7)
    side.tick_params(axis="y", labelleft=False)
    side.set_xlabel("Count")
