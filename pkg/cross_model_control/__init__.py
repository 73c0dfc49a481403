'''
Cross-model control: a small delta model, trained once against a frozen
template model, steers other language models at decoding time by adding
its (vocabulary-mapped) logits to theirs.
'''
