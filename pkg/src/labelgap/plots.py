"""Grouped bar charts of report cells as standalone SVG."""
from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

WIDTH, HEIGHT = 640, 400
MARGIN = {"left": 60, "right": 150, "top": 40, "bottom": 50}
COLORS = ("#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377")

METRICS = {
    "accuracy": ("mean_acc", "std_acc", "Accuracy"),
    "f1": ("mean_macro_f1", None, "Macro F1"),
}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def bar_chart(cells, metric: str, title: str) -> ET.Element:
    """One group per labeling method, one bar per family; y axis 0..1."""
    key, err_key, ylabel = METRICS[metric]
    labelings = list(dict.fromkeys(c["labeling"] for c in cells))
    families = list(dict.fromkeys(c["family"] for c in cells))
    by = {(c["labeling"], c["family"]): c for c in cells}

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(WIDTH), height=str(HEIGHT),
                     viewBox=f"0 0 {WIDTH} {HEIGHT}")
    ET.SubElement(svg, "title").text = title
    ET.SubElement(svg, "rect", x="0", y="0", width=str(WIDTH), height=str(HEIGHT), fill="white")
    x0, y0 = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def ypos(v):
        return y0 + ph * (1.0 - min(max(v, 0.0), 1.0))

    text = ET.SubElement(svg, "text", x=str(WIDTH / 2), y="24", **{"text-anchor": "middle", "font-size": "16"})
    text.text = title
    axes = ET.SubElement(svg, "g", stroke="black", **{"font-size": "11"})
    ET.SubElement(axes, "line", x1=str(x0), y1=str(y0), x2=str(x0), y2=str(y0 + ph))
    ET.SubElement(axes, "line", x1=str(x0), y1=str(y0 + ph), x2=str(x0 + pw), y2=str(y0 + ph))
    for i in range(6):
        v = i / 5
        y = ypos(v)
        ET.SubElement(axes, "line", x1=str(x0 - 4), y1=_fmt(y), x2=str(x0), y2=_fmt(y))
        t = ET.SubElement(axes, "text", x=str(x0 - 8), y=_fmt(y + 4), stroke="none", **{"text-anchor": "end"})
        t.text = f"{v:.1f}"
    t = ET.SubElement(svg, "text", x="16", y=str(y0 + ph / 2), transform=f"rotate(-90 16 {y0 + ph / 2})",
                      **{"text-anchor": "middle", "font-size": "12"})
    t.text = ylabel

    group_w = pw / max(len(labelings), 1)
    bar_w = group_w * 0.7 / max(len(families), 1)
    bars = ET.SubElement(svg, "g", {"class": "bars"})
    for gi, lab in enumerate(labelings):
        gx = x0 + gi * group_w + group_w * 0.15
        t = ET.SubElement(svg, "text", x=_fmt(x0 + (gi + 0.5) * group_w), y=str(y0 + ph + 20),
                          **{"text-anchor": "middle", "font-size": "12"})
        t.text = lab
        for fi, fam in enumerate(families):
            c = by.get((lab, fam))
            if c is None:
                continue
            v = float(c[key])
            bx = gx + fi * bar_w
            rect = ET.SubElement(bars, "rect", x=_fmt(bx), y=_fmt(ypos(v)), width=_fmt(bar_w * 0.9),
                                 height=_fmt(y0 + ph - ypos(v)), fill=COLORS[fi % len(COLORS)],
                                 **{"data-labeling": lab, "data-family": fam, "data-value": repr(v)})
            ET.SubElement(rect, "title").text = f"{fam} / {lab}: {v:.3f}"
            if err_key is not None:
                e = float(c[err_key])
                cx = bx + bar_w * 0.45
                ET.SubElement(bars, "line", x1=_fmt(cx), x2=_fmt(cx), y1=_fmt(ypos(v - e)), y2=_fmt(ypos(v + e)),
                              stroke="black")
    legend = ET.SubElement(svg, "g", {"class": "legend", "font-size": "12"})
    lx = x0 + pw + 20
    for fi, fam in enumerate(families):
        ly = y0 + 10 + fi * 20
        ET.SubElement(legend, "rect", x=str(lx), y=str(ly), width="12", height="12", fill=COLORS[fi % len(COLORS)])
        t = ET.SubElement(legend, "text", x=str(lx + 18), y=str(ly + 11))
        t.text = fam
    return svg


def write_report_plots(report: dict, out_dir) -> list[Path]:
    """Accuracy and F1 chart per train speed; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    speeds = list(dict.fromkeys(c["train_speed"] for c in report["cells"]))
    written = []
    for speed in speeds:
        cells = [c for c in report["cells"] if c["train_speed"] == speed]
        for metric, (_, _, label) in METRICS.items():
            svg = bar_chart(cells, metric, f"{label}, trained on {speed}, tested on fast")
            path = out_dir / f"{metric}_{speed.replace('+', '_')}.svg"
            ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)
            written.append(path)
    return written
