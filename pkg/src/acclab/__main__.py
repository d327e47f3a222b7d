from acclab.cli import main

main()
