from windcast.cli import main

main()
