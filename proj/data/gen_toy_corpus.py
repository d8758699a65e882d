#!/usr/bin/env python3
"""Regenerates data/toy/merchants.csv (120 synthetic merchants)."""
import csv
import random
from pathlib import Path

CATEGORIES = {
    ("Food", "Brazilian Cuisine", 30): [
        "feijoada", "picanha", "churrasco", "moqueca", "farofa", "coxinha",
        "brigadeiro", "tapioca", "acarajé", "pão de queijo", "baião de dois", "caipirinha",
    ],
    ("Food", "Pizzeria", 25): [
        "pizza", "calabresa", "margherita", "mussarela", "esfiha", "lasanha",
        "forno a lenha", "borda recheada", "quatro queijos", "portuguesa",
    ],
    ("Food", "Japanese Cuisine", 20): [
        "sushi", "sashimi", "temaki", "ramen", "yakisoba", "tempura",
        "gyoza", "uramaki", "hot roll", "missoshiru",
    ],
    ("Shopping", "Clothing and Accessories", 30): [
        "camisa", "vestido", "blusa", "jaqueta", "bermuda", "moletom",
        "calça jeans", "camisa polo", "tênis", "bolsa", "cinto", "saia",
    ],
    ("Shopping", "Jewelry", 15): [
        "anel", "colar", "brinco", "pulseira", "aliança", "pingente",
        "relógio", "ouro", "prata", "joias",
    ],
}

GENERIC = ["loja", "atendimento", "qualidade", "preços", "cidade", "ambiente", "clientes", "entrega"]

TEMPLATES = [
    "Nossa casa oferece {a}, {b} e {c}.",
    "Temos {a} e {b} com {g} e {h}.",
    "Servimos {a} todos os dias na {g}.",
    "O melhor {a} da {g}, com {b} e {c}.",
    "Venha provar {a} e {b}!",
    "Trabalhamos com {a}, {b} e {g} de {h}.",
]

NAMES = ["Casa", "Cantinho", "Espaço", "Ponto", "Recanto", "Estação", "Vila", "Canto"]


def description(rng, name, items):
    sentences = []
    for _ in range(rng.randint(2, 4)):
        a, b, c = rng.sample(items, 3)
        g, h = rng.sample(GENERIC, 2)
        sentences.append(rng.choice(TEMPLATES).format(name=name, a=a, b=b, c=c, g=g, h=h))
    return " ".join(sentences)


def main():
    rng = random.Random(20240519)
    rows = []
    n = 0
    for (macro, micro, count), items in CATEGORIES.items():
        for i in range(count):
            n += 1
            name = f"{rng.choice(NAMES)} {micro.split()[0]} {i + 1}"
            desc = "" if i == count - 1 and micro in ("Pizzeria", "Jewelry") else description(rng, name, items)
            rows.append([f"m{n:03d}", name, macro, micro, desc, rng.randint(10, 5000)])
    out = Path(__file__).resolve().parent / "toy" / "merchants.csv"
    with out.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["merchant_id", "merchant_name", "macro_category", "micro_category", "description", "transaction_count"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
