#!/usr/bin/env python3
"""Hand-labeled separation replies; writes separation.json."""
import json

T1 = ["pizza", "calabresa", "loja", "atendimento", "forno a lenha", "entrega"]
T2 = ["camisa polo", "calça jeans", "qualidade", "preços", "vestido", "cidade", "tênis"]
T3 = ["sushi", "temaki", "clientes", "ambiente", "hot roll"]

cases = [
 ("plain_two_lines", T1,
  "Group 1: loja, atendimento, entrega\nGroup 2: pizza, calabresa, forno a lenha",
  ["loja", "atendimento", "entrega"]),
 ("markdown_bullets", T1,
  "**Group 1:**\n- loja\n- atendimento\n- entrega\n\n**Group 2:**\n- pizza\n- calabresa\n- forno a lenha",
  ["loja", "atendimento", "entrega"]),
 ("numbered_lists", T2,
  "Group 1 (no relation to Clothing):\n1. qualidade\n2. preços\n3. cidade\n\nGroup 2 (related):\n1. camisa polo\n2. calça jeans\n3. vestido\n4. tênis",
  ["qualidade", "preços", "cidade"]),
 ("intro_sentence_mentions_groups", T3,
  "Sure! Here are the terms separated into group 1 and group 2:\n\nGroup 1: clientes, ambiente\nGroup 2: sushi, temaki, hot roll",
  ["clientes", "ambiente"]),
 ("portuguese_grupo", T1,
  "Grupo 1: loja, atendimento\nGrupo 2: pizza, calabresa, forno a lenha, entrega",
  ["loja", "atendimento"]),
 ("spelled_numbers", T3,
  "Group one - unrelated terms: clientes, ambiente.\nGroup two - related terms: sushi, temaki, hot roll.",
  ["clientes", "ambiente"]),
 ("hash_numbering", T2,
  "Group #1: cidade, preços\nGroup #2: camisa polo, calça jeans, vestido, tênis, qualidade",
  ["cidade", "preços"]),
 ("empty_group_one_none", T3,
  "Group 1: None\nGroup 2: sushi, temaki, clientes, ambiente, hot roll",
  []),
 ("empty_group_one_nenhum", T3,
  "Grupo 1: nenhum\nGrupo 2: sushi, temaki, hot roll, clientes, ambiente",
  []),
 ("explanations_in_parentheses", T1,
  "Group 1:\n- loja (generic word for store)\n- atendimento (service, not food)\n\nGroup 2:\n- pizza (main product)\n- calabresa (a pizza flavor)\n- forno a lenha (cooking method)\n- entrega (delivery of pizzas)",
  ["loja", "atendimento"]),
 ("explanations_after_dash", T2,
  "Group 1:\n- qualidade - too generic\n- cidade - location word\nGroup 2:\n- camisa polo - a garment\n- calça jeans - a garment\n- vestido - a garment\n- tênis - footwear\n- preços - prices of clothes",
  ["qualidade", "cidade"]),
 ("explanations_after_colon", T3,
  "Group 1:\n* clientes: refers to customers\n* ambiente: refers to the place\nGroup 2:\n* sushi: Japanese dish\n* temaki: hand roll\n* hot roll: fried roll",
  ["clientes", "ambiente"]),
 ("hallucinated_terms_dropped", T1,
  "Group 1: loja, atendimento, estacionamento, wifi\nGroup 2: pizza, calabresa, forno a lenha, entrega, mussarela",
  ["loja", "atendimento"]),
 ("missing_terms_default_related", T2,
  "Group 1: qualidade, cidade\nGroup 2: camisa polo, vestido",
  ["qualidade", "cidade"]),
 ("term_in_both_groups_is_related", T1,
  "Group 1: loja, entrega, atendimento\nGroup 2: pizza, calabresa, forno a lenha, entrega",
  ["loja", "atendimento"]),
 ("case_and_accents_differ", T2,
  "Group 1: QUALIDADE, Precos, Cidade\nGroup 2: Camisa Polo, CALCA JEANS, Vestido, Tenis",
  ["qualidade", "preços", "cidade"]),
 ("quoted_items", T3,
  'Group 1: "clientes", "ambiente"\nGroup 2: "sushi", "temaki", "hot roll"',
  ["clientes", "ambiente"]),
 ("semicolon_separated", T1,
  "Group 1: loja; atendimento; entrega\nGroup 2: pizza; calabresa; forno a lenha",
  ["loja", "atendimento", "entrega"]),
 ("trailing_period_and_prose", T3,
  "Group 1: clientes and ambiente.\nGroup 2: sushi, temaki and hot roll.\nLet me know if you need anything else!",
  ["clientes", "ambiente"]),
 ("conjunction_e_portuguese", T2,
  "Grupo 1: qualidade, preços e cidade\nGrupo 2: camisa polo, calça jeans, vestido e tênis",
  ["qualidade", "preços", "cidade"]),
 ("group_two_first", T3,
  "Group 2: sushi, temaki, hot roll\nGroup 1: clientes, ambiente",
  ["clientes", "ambiente"]),
 ("headings_on_own_line", T1,
  "### Group 1\nloja, atendimento, entrega\n\n### Group 2\npizza, calabresa, forno a lenha",
  ["loja", "atendimento", "entrega"]),
 ("heading_with_topic_text", T2,
  "Group 1 (terms with no relation to the topic Clothing and Accessories):\nqualidade, preços, cidade\n\nGroup 2 (terms related to the topic):\ncamisa polo, calça jeans, vestido, tênis",
  ["qualidade", "preços", "cidade"]),
 ("bold_items", T3,
  "Group 1:\n- **clientes**\n- **ambiente**\nGroup 2:\n- **sushi**\n- **temaki**\n- **hot roll**",
  ["clientes", "ambiente"]),
 ("lowercase_group_with_n", T1,
  "group n. 1: loja, atendimento\ngroup n. 2: pizza, calabresa, forno a lenha, entrega",
  ["loja", "atendimento"]),
 ("all_unrelated", T3,
  "Group 1: sushi, temaki, clientes, ambiente, hot roll\nGroup 2: none",
  ["sushi", "temaki", "clientes", "ambiente", "hot roll"]),
 ("multiword_with_extra_spaces", T1,
  "Group 1:  loja ,  atendimento\nGroup 2:  pizza ,  calabresa ,  forno  a  lenha , entrega",
  ["loja", "atendimento"]),
 ("numbered_with_parenthesis", T2,
  "Group 1:\n1) qualidade\n2) preços\nGroup 2:\n1) camisa polo\n2) calça jeans\n3) vestido\n4) tênis\n5) cidade",
  ["qualidade", "preços"]),
]

out = []
for name, terms, reply, unrelated in cases:
    related = [t for t in terms if t not in unrelated]
    out.append({"name": name, "terms": terms, "reply": reply, "unrelated": unrelated, "related": related})
with open("separation.json", "w", encoding="utf-8") as f:
    json.dump(out, f, ensure_ascii=False, indent=2)
    f.write("\n")
print(len(out), "separation cases")
